#include <random>

#include <gtest/gtest.h>

#include "key_oracle.hpp"
#include "keyssd/error.hpp"
#include "keyssd/key_lock_index.hpp"

using namespace keyssd;

TEST(KeyLockIndex, InsertSearchRemove) {
  KeyLockIndex idx;
  const AccessKey a(0x33);
  const AccessKey b(0x18);
  EXPECT_EQ(idx.search(5, a), LockSearch::NotLocked);
  idx.insert(5, a);
  EXPECT_EQ(idx.search(5, a), LockSearch::Match);
  EXPECT_EQ(idx.search(5, b), LockSearch::WrongKey);
  EXPECT_TRUE(idx.is_locked(5));
  EXPECT_TRUE(idx.remove(5));
  EXPECT_FALSE(idx.remove(5));
  EXPECT_EQ(idx.search(5, b), LockSearch::NotLocked);
  EXPECT_TRUE(idx.consistent());
}

TEST(KeyLockIndex, InsertIsIdempotentPerPair) {
  KeyLockIndex idx;
  idx.insert(7, AccessKey(1));
  idx.insert(7, AccessKey(1));
  EXPECT_EQ(idx.locked_count(), 1u);
  EXPECT_EQ(idx.key_count(), 1u);
}

TEST(KeyLockIndex, ConflictingInsertThrows) {
  KeyLockIndex idx;
  idx.insert(7, AccessKey(1));
  try {
    idx.insert(7, AccessKey(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsertConflict);
  }
  EXPECT_EQ(idx.search(7, AccessKey(1)), LockSearch::Match);
}

TEST(KeyLockIndex, SentinelKeyRejected) {
  KeyLockIndex idx;
  EXPECT_THROW(idx.insert(1, kNoKey), Error);
  EXPECT_EQ(idx.locked_count(), 0u);
}

TEST(KeyLockIndex, RecordsOrderedByKeyThenLpn) {
  KeyLockIndex idx;
  idx.insert(30, AccessKey(9));
  idx.insert(10, AccessKey(9));
  idx.insert(20, AccessKey(2));
  const auto recs = idx.records();
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].first, AccessKey(2));
  EXPECT_EQ(recs[1].first, AccessKey(9));
  EXPECT_EQ(recs[1].second, (std::vector<Lpn>{10, 30}));
}

TEST(KeyLockIndex, CountersTrackWork) {
  KeyLockIndex idx;
  idx.insert(1, AccessKey(1));
  idx.search(1, AccessKey(1));
  idx.search(2, AccessKey(1));
  idx.remove(1);
  EXPECT_EQ(idx.counters().insertions, 1u);
  EXPECT_EQ(idx.counters().searches, 2u);
  EXPECT_EQ(idx.counters().removals, 1u);
  idx.reset_counters();
  EXPECT_EQ(idx.counters().searches, 0u);
}

// Random insert/remove traffic checked against the flat-map oracle.
TEST(KeyLockIndex, MatchesFlatMapUnderRandomTraffic) {
  KeyLockIndex idx;
  std::map<Lpn, std::uint32_t> model;
  std::mt19937_64 rng(42);
  for (int i = 0; i < 20000; ++i) {
    const Lpn lpn = rng() % 200;
    const std::uint32_t key = static_cast<std::uint32_t>(rng() % 6);
    if (rng() % 3 == 0) {
      EXPECT_EQ(idx.remove(lpn), model.erase(lpn) == 1);
    } else if (!model.count(lpn) || model[lpn] == key) {
      idx.insert(lpn, AccessKey(key));
      model[lpn] = key;
    }
    const std::uint32_t probe = static_cast<std::uint32_t>(rng() % 6);
    const LockSearch got = idx.search(lpn, AccessKey(probe));
    const LockSearch want = !model.count(lpn)          ? LockSearch::NotLocked
                            : model[lpn] == probe ? LockSearch::Match
                                                       : LockSearch::WrongKey;
    ASSERT_EQ(got, want) << "step " << i;
  }
  EXPECT_EQ(idx.locked_count(), model.size());
  EXPECT_TRUE(idx.consistent());
}
