#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace keyssd {

struct VerifyOptions {
  std::uint64_t seed = 1;
  std::uint64_t oracle_ops = 20000;
  std::uint64_t crash_sequences = 200;
  std::uint64_t codec_frames = 10000;
  /// Test hook: flips one FTL verdict before comparison so the harness can
  /// prove it notices.
  bool inject_fault = false;
};

struct SuiteResult {
  std::string name;
  std::uint64_t cases = 0;
  std::uint64_t failures = 0;
  std::string first_failure;

  bool passed() const { return failures == 0; }
};

SuiteResult oracle_equivalence_suite(const VerifyOptions& options);
SuiteResult crash_recovery_suite(const VerifyOptions& options);
SuiteResult codec_roundtrip_suite(const VerifyOptions& options);
SuiteResult gc_transparency_suite(const VerifyOptions& options);

std::vector<SuiteResult> run_all_suites(const VerifyOptions& options);

}  // namespace keyssd
