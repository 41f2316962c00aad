#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "keyssd/types.hpp"

namespace keyssd {

enum class LogLayer { Ftl, Host, Transport };
enum class LogEvent { Grant, Deny, Flush, Gc, Lockout };

struct LogRecord {
  std::uint64_t ts = 0;
  LogLayer layer = LogLayer::Ftl;
  LogEvent event = LogEvent::Grant;
  Lba lba = 0;
  AccessKey key;
  std::string detail;
};

/// `ts=<op-index> layer=<layer> event=<event> lba=0x<hex> key=<masked> detail=<text>`
std::string format_record(const LogRecord& record);

std::string_view to_string(LogLayer layer);
std::string_view to_string(LogEvent event);

/// Bounded, thread-safe event sink shared by the simulated layers.
///
/// Grant events are high-volume, so they are recorded only when
/// `record_grants` is set; everything else is always kept. When the
/// capacity is exceeded the oldest records are dropped.
class EventLog {
 public:
  explicit EventLog(std::size_t capacity = 65536, bool record_grants = false)
      : capacity_(capacity), record_grants_(record_grants) {}

  void append(LogRecord record);

  std::vector<LogRecord> records() const;
  std::vector<LogRecord> filter(LogLayer layer, LogEvent event) const;
  std::vector<std::string> lines() const;

  std::size_t dropped() const;
  void clear();

 private:
  mutable std::mutex mutex_;
  std::deque<LogRecord> records_;
  std::size_t capacity_;
  bool record_grants_;
  std::size_t dropped_ = 0;
};

}  // namespace keyssd
