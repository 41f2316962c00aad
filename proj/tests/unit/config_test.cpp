#include <functional>

#include <gtest/gtest.h>

#include "keyssd/config.hpp"
#include "keyssd/error.hpp"

using namespace keyssd;

namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Config, Defaults) {
  const ExperimentConfig c;
  EXPECT_EQ(c.queue_depths, (std::vector<std::size_t>{1, 2, 4, 8, 16, 32}));
  EXPECT_EQ(c.flush_modes.size(), 2u);
  EXPECT_EQ(c.lockout_threshold, 64u);
  EXPECT_NO_THROW(validate(c));
}

TEST(Config, ParsesFile) {
  const ExperimentConfig c = parse_config(
      "# sweep\n"
      "ftl = static, dynamic\n"
      "flush_mode = SF\n"
      "queue_depth = 1,8   # two points\n"
      "locked_fraction = 0,50,100\n"
      "seed = 0x2A\n"
      "read_verify = off\n"
      "close_mode = NoClose\n"
      "pattern = RandRead\n"
      "profile = raw\n");
  EXPECT_EQ(c.variants, (std::vector<FtlVariant>{FtlVariant::KeyStatic, FtlVariant::KeyDynamic}));
  EXPECT_EQ(c.flush_modes, std::vector<FlushMode>{FlushMode::SelectiveFlush});
  EXPECT_EQ(c.queue_depths, (std::vector<std::size_t>{1, 8}));
  EXPECT_EQ(c.locked_fractions, (std::vector<unsigned>{0, 50, 100}));
  EXPECT_EQ(c.seed, 42u);
  EXPECT_FALSE(c.read_verify);
  EXPECT_EQ(c.close_mode, CloseMode::NoClose);
  EXPECT_EQ(c.pattern, Pattern::RandRead);
  EXPECT_EQ(c.profile, FileProfile::RawDevice);
}

TEST(Config, ErrorsNameLineAndField) {
  const std::string m = message_of([] { parse_config("seed = 1\n\nqueue_depth = four\n"); });
  EXPECT_NE(m.find("line 3"), std::string::npos) << m;
  EXPECT_NE(m.find("queue_depth"), std::string::npos) << m;
  EXPECT_NE(message_of([] { parse_config("warp = 9"); }).find("warp"), std::string::npos);
  EXPECT_NE(message_of([] { parse_config("no equals sign"); }).find("line 1"), std::string::npos);
}

TEST(Config, RejectsBadValues) {
  ExperimentConfig c;
  EXPECT_FALSE(message_of([&] { apply_setting(c, "ftl", "turbo"); }).empty());
  EXPECT_FALSE(message_of([&] { apply_setting(c, "flush_mode", "XF"); }).empty());
  EXPECT_FALSE(message_of([&] { apply_setting(c, "queue_depth", "1,,2"); }).empty());
  EXPECT_FALSE(message_of([&] { apply_setting(c, "read_verify", "maybe"); }).empty());
  EXPECT_FALSE(message_of([&] { apply_setting(c, "seed", "-1"); }).empty());
}

TEST(Config, ValidateCrossField) {
  ExperimentConfig c;
  c.queue_depths = {0};
  EXPECT_NE(message_of([&] { validate(c); }).find("queue_depth"), std::string::npos);
  c = {};
  c.queue_depths = {129};
  EXPECT_FALSE(message_of([&] { validate(c); }).empty());
  c = {};
  c.locked_fractions = {101};
  EXPECT_FALSE(message_of([&] { validate(c); }).empty());
  c = {};
  c.lockout_threshold = 0;
  EXPECT_FALSE(message_of([&] { validate(c); }).empty());
  c = {};
  c.geometry.host_page_bytes = 1000;
  EXPECT_NE(message_of([&] { validate(c); }).find("geometry"), std::string::npos);
}

TEST(Config, MissingFile) {
  EXPECT_FALSE(message_of([] { load_config_file("/nonexistent/x.conf"); }).empty());
}

TEST(Config, ScenarioProjection) {
  ExperimentConfig c = parse_config("scenario = bruteforce\nftl = dynamic\nlockout_threshold = 8\nplanted_at = 3\n");
  const ScenarioConfig s = c.scenario_config();
  EXPECT_EQ(s.kind, AttackKind::BruteForce);
  EXPECT_EQ(s.variant, FtlVariant::KeyDynamic);
  EXPECT_EQ(s.lockout_threshold, 8u);
  EXPECT_EQ(s.planted_at, 3u);
  const WorkloadSpec w = c.workload(4, 50);
  EXPECT_EQ(w.queue_depth, 4u);
  EXPECT_EQ(w.locked_percent, 50u);
}
