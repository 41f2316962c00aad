#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "keyssd/config.hpp"

namespace keyssd {

inline constexpr int kCsvSchemaVersion = 1;

/// One bench result. Counters cover the measured phase only; setup writes
/// done by `prepare` are excluded.
struct MetricsRow {
  FtlVariant variant = FtlVariant::KeyStatic;
  FlushMode flush_mode = FlushMode::SelectiveFlush;
  std::size_t queue_depth = 1;
  unsigned locked_fraction = 0;
  Pattern pattern = Pattern::SeqWrite;
  FileProfile profile = FileProfile::SmallFiles;
  std::uint64_t seed = 0;

  std::uint64_t ops = 0;
  std::uint64_t decisions = 0;
  std::uint64_t grants = 0;
  std::uint64_t denials = 0;
  std::uint64_t lockout_rejections = 0;
  std::uint64_t device_reads = 0;
  std::uint64_t device_programs = 0;
  std::uint64_t device_erases = 0;
  std::uint64_t flush_count = 0;
  std::uint64_t flushed_bytes = 0;
  std::uint64_t dirty_pages_at_flush = 0;
  std::uint64_t table_pages = 0;
  std::uint64_t gc_runs = 0;
  std::uint64_t gc_moves = 0;
  std::uint64_t index_insertions = 0;
  std::uint64_t index_searches = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
  std::uint64_t key_inode_entries = 0;
  std::uint64_t key_lba_entries = 0;

  /// Dirty share of the table across all flushes, 0 when nothing flushed.
  double dirty_fraction() const;
};

/// Runs one measured workload on a fresh rig.
MetricsRow run_bench_point(const ExperimentConfig& config, FtlVariant variant, FlushMode mode,
                           std::size_t queue_depth, unsigned locked_fraction);

/// Full sweep: variants x flush modes x queue depths x locked fractions.
std::vector<MetricsRow> run_bench(const ExperimentConfig& config);

std::string csv_header();
std::string csv_line(const MetricsRow& row);
void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows);

/// Compact human-readable summary, one line per row.
std::vector<std::string> summarize(const std::vector<MetricsRow>& rows);

}  // namespace keyssd
