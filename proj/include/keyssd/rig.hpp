#pragma once

#include <memory>

#include "keyssd/event_log.hpp"
#include "keyssd/flash_device.hpp"
#include "keyssd/host_stack.hpp"
#include "keyssd/key_ftl.hpp"
#include "keyssd/sata_link.hpp"

namespace keyssd {

struct RigConfig {
  FlashGeometry geometry;
  FtlConfig ftl;
  HostConfig host;
  bool log_grants = false;
};

/// One simulated machine: flash, firmware, link and host stack wired
/// together. Not copyable or movable because the layers hold references
/// to each other.
struct Rig {
  explicit Rig(const RigConfig& config);
  /// Adopts an existing flash image and mounts it.
  Rig(const RigConfig& config, FlashDevice image);

  Rig(const Rig&) = delete;
  Rig& operator=(const Rig&) = delete;

  RigConfig config;
  EventLog log;
  FlashDevice flash;
  KeyFtl ftl;
  SataLink link;
  HostStack host;
};

}  // namespace keyssd
