#include "keyssd/rig.hpp"

namespace keyssd {

Rig::Rig(const RigConfig& cfg) : Rig(cfg, FlashDevice(cfg.geometry)) {}

Rig::Rig(const RigConfig& cfg, FlashDevice image)
    : config(cfg),
      log(65536, cfg.log_grants),
      flash(std::move(image)),
      ftl(flash, cfg.ftl, &log),
      link(ftl, &log),
      host(link, cfg.host, &log) {}

}  // namespace keyssd
