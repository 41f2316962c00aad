#include <fmt/format.h>

#include "keyssd/bench.hpp"

namespace keyssd {

std::vector<std::string> summarize(const std::vector<MetricsRow>& rows) {
  std::vector<std::string> out;
  out.push_back(fmt::format("{:<8} {:<3} {:>3} {:>4} {:>9} {:>9} {:>8} {:>10} {:>12} {:>7}",
                            "variant", "fm", "qd", "lock%", "grants", "denials", "reads",
                            "programs", "flushed", "dirty"));
  for (const MetricsRow& r : rows) {
    out.push_back(fmt::format("{:<8} {:<3} {:>3} {:>4} {:>9} {:>9} {:>8} {:>10} {:>12} {:>7.3f}",
                              to_string(r.variant), to_string(r.flush_mode), r.queue_depth,
                              r.locked_fraction, r.grants, r.denials, r.device_reads,
                              r.device_programs, r.flushed_bytes, r.dirty_fraction()));
  }
  return out;
}

}  // namespace keyssd
