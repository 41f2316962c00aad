#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace keyssd {

enum class ErrorCode {
  // flash
  OutOfRange,
  ProgramOnDirtyPage,
  BadPayloadSize,
  BadSnapshot,
  // ftl
  InvalidConfig,
  InsertConflict,
  CorruptImage,
  NoSpace,
  // transport
  FieldOverflow,
  MalformedFrame,
  QueueFull,
  UnknownCommand,
  // host
  NotFound,
  AlreadyExists,
  BadHandle,
  AccessDenied,
  OpenDeniedByDevice,
  DeleteDenied,
  DeviceError,
  DeviceLockedOut,
  // harness
  ConfigError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix, for callers that rewrap.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace keyssd
