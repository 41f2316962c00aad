#include "keyssd/bench.hpp"

#include <fmt/format.h>

#include "keyssd/rig.hpp"

namespace keyssd {

double MetricsRow::dirty_fraction() const {
  if (flush_count == 0 || table_pages == 0) {
    return 0.0;
  }
  return static_cast<double>(dirty_pages_at_flush) /
         static_cast<double>(flush_count * table_pages);
}

namespace {

struct Snapshot {
  FtlCounters ftl;
  FlashCounters flash;
  KeyLockIndex::Counters index;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;

  static Snapshot take(Rig& rig) {
    return {rig.ftl.counters(), rig.flash.counters(), rig.ftl.lock_index().counters(),
            rig.host.page_cache().hits(), rig.host.page_cache().misses()};
  }
};

}  // namespace

MetricsRow run_bench_point(const ExperimentConfig& config, FtlVariant variant, FlushMode mode,
                           std::size_t queue_depth, unsigned locked_fraction) {
  RigConfig rc;
  rc.geometry = config.geometry;
  rc.ftl.variant = variant;
  rc.ftl.flush_mode = mode;
  rc.ftl.lockout_threshold = config.lockout_threshold;
  rc.host.read_verify = config.read_verify;
  rc.host.close_mode = config.close_mode;
  rc.host.cache_pages = config.cache_pages;
  rc.host.queue_depth = queue_depth;
  Rig rig(rc);

  const WorkloadSpec spec = config.workload(queue_depth, locked_fraction);
  prepare(rig.host, spec);
  const auto ops = generate(spec);
  const Snapshot before = Snapshot::take(rig);
  const WorkloadStats stats = run(rig.host, spec, ops);
  const Snapshot after = Snapshot::take(rig);

  MetricsRow row;
  row.variant = variant;
  row.flush_mode = mode;
  row.queue_depth = queue_depth;
  row.locked_fraction = locked_fraction;
  row.pattern = spec.pattern;
  row.profile = spec.profile;
  row.seed = spec.seed;
  row.ops = stats.ops;
  row.decisions = after.ftl.commands - before.ftl.commands;
  row.grants = after.ftl.grants - before.ftl.grants;
  row.denials = after.ftl.denials - before.ftl.denials;
  row.lockout_rejections = after.ftl.lockout_rejections - before.ftl.lockout_rejections;
  row.device_reads = after.flash.reads - before.flash.reads;
  row.device_programs = after.flash.programs - before.flash.programs;
  row.device_erases = after.flash.erases - before.flash.erases;
  row.flush_count = after.ftl.flush_count - before.ftl.flush_count;
  row.flushed_bytes = after.ftl.flushed_bytes - before.ftl.flushed_bytes;
  row.dirty_pages_at_flush = after.ftl.dirty_pages_at_flush - before.ftl.dirty_pages_at_flush;
  row.table_pages = rig.ftl.table_pages();
  row.gc_runs = after.ftl.gc_runs - before.ftl.gc_runs;
  row.gc_moves = after.ftl.gc_moves - before.ftl.gc_moves;
  row.index_insertions = after.index.insertions - before.index.insertions;
  row.index_searches = after.index.searches - before.index.searches;
  row.cache_hits = after.hits - before.hits;
  row.cache_misses = after.misses - before.misses;
  row.key_inode_entries = rig.host.key_inode_table().size();
  row.key_lba_entries = rig.host.key_lba_table().size();
  return row;
}

std::vector<MetricsRow> run_bench(const ExperimentConfig& config) {
  validate(config);
  std::vector<MetricsRow> rows;
  for (FtlVariant v : config.variants) {
    for (FlushMode m : config.flush_modes) {
      for (std::size_t q : config.queue_depths) {
        for (unsigned f : config.locked_fractions) {
          rows.push_back(run_bench_point(config, v, m, q, f));
        }
      }
    }
  }
  return rows;
}

std::string csv_header() {
  return "schema_version,variant,flush_mode,queue_depth,locked_fraction,pattern,profile,seed,"
         "ops,decisions,grants,denials,lockout_rejections,device_reads,device_programs,"
         "device_erases,flush_count,flushed_bytes,dirty_pages_at_flush,table_pages,gc_runs,"
         "gc_moves,index_insertions,index_searches,cache_hits,cache_misses,key_inode_entries,"
         "key_lba_entries";
}

std::string csv_line(const MetricsRow& r) {
  return fmt::format(
      "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
      kCsvSchemaVersion, to_string(r.variant), to_string(r.flush_mode), r.queue_depth,
      r.locked_fraction, to_string(r.pattern), to_string(r.profile), r.seed, r.ops, r.decisions,
      r.grants, r.denials, r.lockout_rejections, r.device_reads, r.device_programs,
      r.device_erases, r.flush_count, r.flushed_bytes, r.dirty_pages_at_flush, r.table_pages,
      r.gc_runs, r.gc_moves, r.index_insertions, r.index_searches, r.cache_hits, r.cache_misses,
      r.key_inode_entries, r.key_lba_entries);
}

void write_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
  out << csv_header() << '\n';
  for (const MetricsRow& r : rows) {
    out << csv_line(r) << '\n';
  }
}

}  // namespace keyssd
