#include <fmt/format.h>

#include "keyssd/error.hpp"
#include "keyssd/event_log.hpp"
#include "keyssd/types.hpp"

namespace keyssd {

std::string mask_key(AccessKey key) {
  if (key.is_none()) {
    return "none";
  }
  return fmt::format("******{:02x}", key.value() & 0xFFu);
}

std::string hex(std::uint64_t value) { return fmt::format("0x{:x}", value); }

std::string_view to_string(FtlVariant v) {
  switch (v) {
    case FtlVariant::Baseline:
      return "baseline";
    case FtlVariant::KeyStatic:
      return "static";
    case FtlVariant::KeyDynamic:
      return "dynamic";
  }
  return "?";
}

std::string_view to_string(FlushMode m) {
  return m == FlushMode::AllFlush ? "AF" : "SF";
}

std::string_view to_string(MultiMode m) {
  return m == MultiMode::FirstLpnOnly ? "first-lpn" : "all-lpns";
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::OutOfRange:
      return "OutOfRange";
    case ErrorCode::ProgramOnDirtyPage:
      return "ProgramOnDirtyPage";
    case ErrorCode::BadPayloadSize:
      return "BadPayloadSize";
    case ErrorCode::BadSnapshot:
      return "BadSnapshot";
    case ErrorCode::InvalidConfig:
      return "InvalidConfig";
    case ErrorCode::InsertConflict:
      return "InsertConflict";
    case ErrorCode::CorruptImage:
      return "CorruptImage";
    case ErrorCode::NoSpace:
      return "NoSpace";
    case ErrorCode::FieldOverflow:
      return "FieldOverflow";
    case ErrorCode::MalformedFrame:
      return "MalformedFrame";
    case ErrorCode::QueueFull:
      return "QueueFull";
    case ErrorCode::UnknownCommand:
      return "UnknownCommand";
    case ErrorCode::NotFound:
      return "NotFound";
    case ErrorCode::AlreadyExists:
      return "AlreadyExists";
    case ErrorCode::BadHandle:
      return "BadHandle";
    case ErrorCode::AccessDenied:
      return "AccessDenied";
    case ErrorCode::OpenDeniedByDevice:
      return "OpenDeniedByDevice";
    case ErrorCode::DeleteDenied:
      return "DeleteDenied";
    case ErrorCode::DeviceError:
      return "DeviceError";
    case ErrorCode::DeviceLockedOut:
      return "DeviceLockedOut";
    case ErrorCode::ConfigError:
      return "ConfigError";
  }
  return "Unknown";
}

std::string_view to_string(LogLayer layer) {
  switch (layer) {
    case LogLayer::Ftl:
      return "ftl";
    case LogLayer::Host:
      return "host";
    case LogLayer::Transport:
      return "transport";
  }
  return "?";
}

std::string_view to_string(LogEvent event) {
  switch (event) {
    case LogEvent::Grant:
      return "grant";
    case LogEvent::Deny:
      return "deny";
    case LogEvent::Flush:
      return "flush";
    case LogEvent::Gc:
      return "gc";
    case LogEvent::Lockout:
      return "lockout";
  }
  return "?";
}

std::string format_record(const LogRecord& r) {
  return fmt::format("ts={} layer={} event={} lba=0x{:x} key={} detail={}", r.ts,
                     to_string(r.layer), to_string(r.event), r.lba, mask_key(r.key),
                     r.detail.empty() ? "-" : r.detail);
}

void EventLog::append(LogRecord record) {
  if (record.event == LogEvent::Grant && !record_grants_) {
    return;
  }
  std::lock_guard lock(mutex_);
  records_.push_back(std::move(record));
  while (records_.size() > capacity_) {
    records_.pop_front();
    ++dropped_;
  }
}

std::vector<LogRecord> EventLog::records() const {
  std::lock_guard lock(mutex_);
  return {records_.begin(), records_.end()};
}

std::vector<LogRecord> EventLog::filter(LogLayer layer, LogEvent event) const {
  std::lock_guard lock(mutex_);
  std::vector<LogRecord> out;
  for (const auto& r : records_) {
    if (r.layer == layer && r.event == event) {
      out.push_back(r);
    }
  }
  return out;
}

std::vector<std::string> EventLog::lines() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    out.push_back(format_record(r));
  }
  return out;
}

std::size_t EventLog::dropped() const {
  std::lock_guard lock(mutex_);
  return dropped_;
}

void EventLog::clear() {
  std::lock_guard lock(mutex_);
  records_.clear();
  dropped_ = 0;
}

}  // namespace keyssd
