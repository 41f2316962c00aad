#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "keyssd/attack.hpp"
#include "keyssd/flash_device.hpp"
#include "keyssd/host_stack.hpp"
#include "keyssd/workload.hpp"

namespace keyssd {

/// Everything a bench or attack run needs. List-valued fields are sweep
/// axes; bench emits one row per combination.
struct ExperimentConfig {
  FlashGeometry geometry;
  std::vector<FtlVariant> variants{FtlVariant::KeyStatic};
  std::vector<FlushMode> flush_modes{FlushMode::AllFlush, FlushMode::SelectiveFlush};
  std::vector<std::size_t> queue_depths{1, 2, 4, 8, 16, 32};
  std::vector<unsigned> locked_fractions{100};
  std::uint64_t flush_interval = 64;
  bool read_verify = true;
  CloseMode close_mode = CloseMode::Close;
  std::uint64_t lockout_threshold = 64;
  std::size_t cache_pages = 1024;
  std::uint64_t seed = 1;

  Pattern pattern = Pattern::SeqWrite;
  FileProfile profile = FileProfile::SmallFiles;
  std::uint64_t file_count = 256;
  std::uint64_t file_bytes = 0;
  Lba region_lba = 0;
  std::uint64_t region_bytes = 4ULL << 20;
  std::uint64_t ops = 4096;
  std::uint32_t clients = 1;

  AttackKind scenario = AttackKind::NormalPathEncrypt;
  bool attacker_has_key = false;
  bool warm_cache = true;
  bool lock_victim = true;
  std::uint64_t planted_at = 0;
  std::uint64_t max_guesses = 0;

  WorkloadSpec workload(std::size_t queue_depth, unsigned locked_percent) const;
  ScenarioConfig scenario_config() const;
};

/// Applies one `key = value` setting. Throws ConfigError naming the field.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Parses `key = value` lines; `#` starts a comment. Throws ConfigError
/// with the line number and field.
ExperimentConfig parse_config(std::string_view text, ExperimentConfig base = {});
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// Checks cross-field constraints. Throws ConfigError.
void validate(const ExperimentConfig& config);

FtlVariant parse_variant(std::string_view text);
FlushMode parse_flush_mode(std::string_view text);
CloseMode parse_close_mode(std::string_view text);
Pattern parse_pattern(std::string_view text);
FileProfile parse_profile(std::string_view text);
AttackKind parse_attack(std::string_view text);
bool parse_bool(std::string_view text);

}  // namespace keyssd
