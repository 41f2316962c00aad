#include <gtest/gtest.h>

#include "key_oracle.hpp"
#include "keyssd/property_suites.hpp"
#include "keyssd/reference_model.hpp"

using namespace keyssd;

namespace {

VerifyOptions quick() {
  VerifyOptions o;
  o.oracle_ops = 3000;
  o.crash_sequences = 40;
  o.codec_frames = 2000;
  return o;
}

}  // namespace

TEST(ReferenceModel, AgreesWithTestOracle) {
  ReferenceModel m;
  oracle::KeyOracle o;
  std::uint64_t state = 12345;
  auto next = [&] {
    state = state * 6364136223846793005ULL + 1442695040888963407ULL;
    return state >> 33;
  };
  const std::uint32_t keys[] = {1, 2, 3, oracle::kNone};
  for (int i = 0; i < 5000; ++i) {
    const std::uint64_t n = 1 + next() % 3;
    const Lpn lpn = next() % 64;
    const std::uint32_t k = keys[next() % 4];
    const int op = static_cast<int>(next() % 3);
    bool got = false;
    bool want = false;
    if (op == 0) {
      got = m.write(lpn, n, AccessKey(k), MultiMode::AllLpns) == ReferenceModel::Outcome::Grant;
      want = o.write(lpn, n, k, false);
    } else if (op == 1) {
      got = m.read(lpn, n, AccessKey(k), MultiMode::AllLpns) == ReferenceModel::Outcome::Grant;
      want = o.read(lpn, n, k, false);
    } else {
      got = m.trim(lpn, n, AccessKey(k)) == ReferenceModel::Outcome::Grant;
      want = o.trim(lpn, n, k);
    }
    ASSERT_EQ(got, want) << "op " << i;
  }
  EXPECT_EQ(m.locked_pages(), o.keys().size());
}

TEST(PropertySuites, AllPass) {
  for (const SuiteResult& r : run_all_suites(quick())) {
    EXPECT_TRUE(r.passed()) << r.name << ": " << r.first_failure;
    EXPECT_GT(r.cases, 0u) << r.name;
  }
}

TEST(PropertySuites, InjectedFaultIsCaught) {
  VerifyOptions o = quick();
  o.inject_fault = true;
  const SuiteResult r = oracle_equivalence_suite(o);
  EXPECT_FALSE(r.passed());
  EXPECT_EQ(r.failures, 1u);
  EXPECT_FALSE(r.first_failure.empty());
}
