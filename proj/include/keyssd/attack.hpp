#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "keyssd/rig.hpp"

namespace keyssd {

enum class AttackKind { NormalPathEncrypt, DirectIoOverwrite, PageCacheExfiltrate, BruteForce };

/// Attack stages. Infection and Notice are bookkeeping; the others are
/// concrete actions against the storage stack.
enum class Step { Infection, Open, Read, KeyGuess, Encrypt, WriteCopy, Overwrite, Delete, Notice };

std::string_view to_string(AttackKind k);
std::string_view to_string(Step s);

inline constexpr Lba kPinnedVictimLba = 0x43000;
inline constexpr AccessKey kOwnerKey{0x00000033};

struct ScenarioConfig {
  AttackKind kind = AttackKind::NormalPathEncrypt;
  FtlVariant variant = FtlVariant::KeyStatic;
  bool read_verify = true;
  std::uint64_t lockout_threshold = 64;
  std::uint64_t seed = 1;
  std::string victim_path = "/test.db";
  /// 0 picks the scenario default (1 MiB for the overwrite, 64 KiB otherwise).
  std::uint64_t victim_bytes = 0;
  /// Whether the owner writes the victim with its key.
  bool lock_victim = true;
  /// Attacker uses the owner's key (a compromised application).
  bool attacker_has_key = false;
  /// Page-cache scenario: owner reads the file before the attack.
  bool warm_cache = true;
  /// Brute force: 1-based guess index that carries the right key, 0 for never.
  std::uint64_t planted_at = 0;
  /// Brute force: guesses to try; 0 means threshold + 8.
  std::uint64_t max_guesses = 0;
};

struct StepOutcome {
  Step step = Step::Infection;
  bool ok = true;
  std::string detail;
};

struct ScenarioVerdict {
  AttackKind kind = AttackKind::NormalPathEncrypt;
  std::vector<StepOutcome> steps;
  std::optional<Step> blocked_at;
  std::vector<std::string> device_log;

  /// Victim still present with its original bytes.
  bool original_intact = false;
  /// Attacker obtained the victim's plaintext.
  bool leaked = false;
  /// Raw overwrite: LBAs the device refused, in order.
  std::vector<Lba> denied_lbas;
  std::vector<Lba> granted_lbas;
  /// Brute force bookkeeping.
  std::uint64_t attempts = 0;
  std::optional<std::uint64_t> lockout_at;
  std::optional<std::uint64_t> breach_at;
  std::uint64_t refused_after_lockout = 0;

  bool breached() const { return !blocked_at.has_value(); }
};

/// Builds a fresh rig for the scenario and runs it.
ScenarioVerdict run_scenario(const ScenarioConfig& config);

/// Seeded byte-mixing stand-in for ransomware encryption.
Bytes scramble(std::span<const std::uint8_t> data, std::uint64_t seed);

std::vector<std::string> format_verdict(const ScenarioVerdict& verdict);

}  // namespace keyssd
