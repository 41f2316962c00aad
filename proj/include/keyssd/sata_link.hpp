#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "keyssd/event_log.hpp"
#include "keyssd/key_ftl.hpp"
#include "keyssd/register_fis.hpp"

namespace keyssd {

using CommandId = std::uint64_t;

enum class CompletionStatus { Success, AccessDenied, DeviceLockedOut, DeviceError };

std::string_view to_string(CompletionStatus status);

struct EventQueueEntry {
  CommandId id = 0;
  AtaCommand command = AtaCommand::ReadDmaExt;
  Lba lba = 0;
  std::uint32_t sector_count = 0;
  AccessKey key;
  /// Write payload; the data FIS is not modelled byte-for-byte.
  Bytes data;
};

struct Completion {
  CommandId id = 0;
  AtaCommand command = AtaCommand::ReadDmaExt;
  Lba lba = 0;
  CompletionStatus status = CompletionStatus::Success;
  Bytes payload;
  std::string error;
};

/// Host/device boundary: decodes Register FIS frames into the device's
/// software event queue and runs them against the FTL in FIFO order.
///
/// `submit` may be called from several threads; `device_drain` is meant
/// for the single device owner.
class SataLink {
 public:
  static constexpr std::size_t kQueueCapacity = 128;

  explicit SataLink(KeyFtl& ftl, EventLog* log = nullptr);

  /// Throws MalformedFrame, UnknownCommand, FieldOverflow (misaligned or
  /// mis-sized transfer) or QueueFull.
  CommandId submit(std::span<const std::uint8_t> frame, Bytes data = {});

  std::vector<Completion> device_drain();

  /// submit + drain for callers that own the link exclusively. Completions of
  /// other pending commands are discarded.
  Completion execute(std::span<const std::uint8_t> frame, Bytes data = {});

  std::size_t pending() const;
  KeyFtl& ftl() { return ftl_; }
  const FlashGeometry& geometry() const { return ftl_.geometry(); }

  Lpn lba_to_lpn(Lba lba) const { return lba / geometry().sectors_per_host_page(); }
  Lba lpn_to_lba(Lpn lpn) const { return lpn * geometry().sectors_per_host_page(); }

 private:
  Completion dispatch(EventQueueEntry& entry);

  KeyFtl& ftl_;
  EventLog* log_;
  mutable std::mutex queue_mutex_;
  std::deque<EventQueueEntry> queue_;
  CommandId next_id_ = 1;
  std::mutex drain_mutex_;
};

}  // namespace keyssd
