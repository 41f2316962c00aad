#include <algorithm>
#include <sstream>

#include <gtest/gtest.h>

#include "keyssd/bench.hpp"

using namespace keyssd;

namespace {

ExperimentConfig small_sweep() {
  ExperimentConfig c;
  c.file_count = 32;
  c.queue_depths = {1};
  c.flush_interval = 8;
  return c;
}

std::size_t columns(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}

}  // namespace

TEST(Bench, SweepShape) {
  ExperimentConfig c = small_sweep();
  c.variants = {FtlVariant::KeyStatic, FtlVariant::KeyDynamic};
  c.queue_depths = {1, 4};
  const auto rows = run_bench(c);
  EXPECT_EQ(rows.size(), 2u * 2u * 2u);
}

TEST(Bench, SelectiveFlushWritesLess) {
  ExperimentConfig c = small_sweep();
  const auto rows = run_bench(c);
  ASSERT_EQ(rows.size(), 2u);
  const MetricsRow& af = rows[0];
  const MetricsRow& sf = rows[1];
  ASSERT_EQ(af.flush_mode, FlushMode::AllFlush);
  ASSERT_GT(af.flush_count, 0u);
  EXPECT_EQ(af.flush_count, sf.flush_count);
  EXPECT_LT(sf.flushed_bytes, af.flushed_bytes);
  EXPECT_EQ(af.flushed_bytes, af.flush_count * af.table_pages * 32768u);
  EXPECT_GT(sf.dirty_fraction(), 0.0);
  EXPECT_LT(sf.dirty_fraction(), 1.0);
}

TEST(Bench, CsvShape) {
  const auto rows = run_bench(small_sweep());
  std::ostringstream out;
  write_csv(out, rows);
  std::istringstream in(out.str());
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("schema_version,", 0), 0u);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    EXPECT_EQ(columns(line), columns(header));
    EXPECT_EQ(line.rfind("1,static,", 0), 0u);
    ++n;
  }
  EXPECT_EQ(n, rows.size());
  EXPECT_EQ(summarize(rows).size(), rows.size() + 1);
}

TEST(Bench, Deterministic) {
  const auto a = run_bench(small_sweep());
  const auto b = run_bench(small_sweep());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(csv_line(a[i]), csv_line(b[i]));
  }
}

TEST(Bench, CloseModeTableSizes) {
  ExperimentConfig c = small_sweep();
  c.flush_modes = {FlushMode::SelectiveFlush};
  c.close_mode = CloseMode::NoClose;
  EXPECT_EQ(run_bench(c).front().key_inode_entries, 32u);
  c.close_mode = CloseMode::Close;
  EXPECT_EQ(run_bench(c).front().key_inode_entries, 0u);
}
