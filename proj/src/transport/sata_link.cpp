#include "keyssd/sata_link.hpp"

#include "keyssd/error.hpp"

namespace keyssd {

std::string_view to_string(CompletionStatus status) {
  switch (status) {
    case CompletionStatus::Success:
      return "Success";
    case CompletionStatus::AccessDenied:
      return "AccessDenied";
    case CompletionStatus::DeviceLockedOut:
      return "DeviceLockedOut";
    case CompletionStatus::DeviceError:
      return "DeviceError";
  }
  return "?";
}

SataLink::SataLink(KeyFtl& ftl, EventLog* log) : ftl_(ftl), log_(log) {}

CommandId SataLink::submit(std::span<const std::uint8_t> frame, Bytes data) {
  const RegisterFis fis = decode_register_fis(frame);
  EventQueueEntry entry;
  entry.lba = fis.lba;
  entry.sector_count = fis.sector_count;
  entry.key = fis.key;
  switch (static_cast<AtaCommand>(fis.command)) {
    case AtaCommand::ReadDmaExt:
    case AtaCommand::WriteDmaExt:
    case AtaCommand::DataSetManagement:
    case AtaCommand::FlushCacheExt:
      entry.command = static_cast<AtaCommand>(fis.command);
      break;
    default:
      throw Error(ErrorCode::UnknownCommand, "command byte " + hex(fis.command));
  }

  if (entry.command != AtaCommand::FlushCacheExt) {
    const std::uint64_t spp = geometry().sectors_per_host_page();
    if (entry.sector_count == 0 || entry.lba % spp != 0 || entry.sector_count % spp != 0) {
      throw Error(ErrorCode::FieldOverflow,
                  "transfer must be whole host pages: lba " + hex(entry.lba) + " count " +
                      std::to_string(entry.sector_count));
    }
  }
  const std::uint64_t expected =
      entry.command == AtaCommand::WriteDmaExt
          ? std::uint64_t{entry.sector_count} * geometry().sector_bytes
          : 0;
  if (data.size() != expected) {
    throw Error(ErrorCode::FieldOverflow, "payload of " + std::to_string(data.size()) +
                                              " bytes, expected " + std::to_string(expected));
  }
  entry.data = std::move(data);

  std::lock_guard lock(queue_mutex_);
  if (queue_.size() >= kQueueCapacity) {
    throw Error(ErrorCode::QueueFull, "event queue holds " + std::to_string(kQueueCapacity));
  }
  entry.id = next_id_++;
  const CommandId id = entry.id;
  queue_.push_back(std::move(entry));
  return id;
}

std::vector<Completion> SataLink::device_drain() {
  std::lock_guard drain(drain_mutex_);
  std::deque<EventQueueEntry> batch;
  {
    std::lock_guard lock(queue_mutex_);
    batch.swap(queue_);
  }
  std::vector<Completion> out;
  out.reserve(batch.size());
  for (EventQueueEntry& entry : batch) {
    out.push_back(dispatch(entry));
  }
  return out;
}

Completion SataLink::execute(std::span<const std::uint8_t> frame, Bytes data) {
  const CommandId id = submit(frame, std::move(data));
  for (Completion& c : device_drain()) {
    if (c.id == id) {
      return std::move(c);
    }
  }
  throw Error(ErrorCode::DeviceError, "completion missing for command " + std::to_string(id));
}

std::size_t SataLink::pending() const {
  std::lock_guard lock(queue_mutex_);
  return queue_.size();
}

Completion SataLink::dispatch(EventQueueEntry& entry) {
  Completion c;
  c.id = entry.id;
  c.command = entry.command;
  c.lba = entry.lba;
  if (ftl_.locked_out()) {
    c.status = CompletionStatus::DeviceLockedOut;
  } else {
    try {
      const Lpn lpn = lba_to_lpn(entry.lba);
      const std::uint64_t pages = entry.sector_count / geometry().sectors_per_host_page();
      Verdict verdict = Verdict::Granted;
      switch (entry.command) {
        case AtaCommand::ReadDmaExt: {
          ReadResult r = ftl_.read(lpn, pages, entry.key);
          verdict = r.verdict;
          c.payload = std::move(r.data);
          break;
        }
        case AtaCommand::WriteDmaExt:
          verdict = ftl_.write(lpn, entry.key, entry.data);
          break;
        case AtaCommand::DataSetManagement:
          verdict = ftl_.trim(lpn, pages, entry.key);
          break;
        case AtaCommand::FlushCacheExt:
          ftl_.handle_flush();
          break;
      }
      c.status = verdict == Verdict::Granted  ? CompletionStatus::Success
                 : verdict == Verdict::Denied ? CompletionStatus::AccessDenied
                                              : CompletionStatus::DeviceLockedOut;
    } catch (const Error& e) {
      c.status = CompletionStatus::DeviceError;
      c.error = e.what();
    }
  }
  if (log_ != nullptr && (c.status == CompletionStatus::AccessDenied ||
                          c.status == CompletionStatus::DeviceLockedOut)) {
    LogRecord r;
    r.ts = c.id;
    r.layer = LogLayer::Transport;
    r.event = c.status == CompletionStatus::DeviceLockedOut ? LogEvent::Lockout : LogEvent::Deny;
    r.lba = c.lba;
    r.key = entry.key;
    r.detail = std::string(to_string(entry.command)) + " status=" + std::string(to_string(c.status));
    log_->append(std::move(r));
  }
  return c;
}

}  // namespace keyssd
