#include <functional>
#include <limits>
#include <thread>

#include <gtest/gtest.h>

#include "keyssd/error.hpp"
#include "keyssd/sata_link.hpp"

using namespace keyssd;

namespace {

struct LinkFixture : ::testing::Test {
  LinkFixture() : flash(geometry()), ftl(flash, config()), link(ftl, &log) {}

  static FlashGeometry geometry() {
    FlashGeometry g;
    g.blocks_per_device = 16;
    g.pages_per_block = 16;
    return g;
  }
  static FtlConfig config() {
    FtlConfig c;
    c.lockout_threshold = std::numeric_limits<std::uint64_t>::max();
    return c;
  }

  FisFrame frame(AtaCommand c, Lba lba, std::uint64_t count, AccessKey key) {
    return encode_register_fis(c, lba, count, key);
  }

  EventLog log;
  FlashDevice flash;
  KeyFtl ftl;
  SataLink link;
};

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigError;
}

}  // namespace

TEST_F(LinkFixture, WriteThenReadThroughFrames) {
  const Completion w =
      link.execute(frame(AtaCommand::WriteDmaExt, 16, 8, AccessKey(0x33)), Bytes(4096, 0x42));
  EXPECT_EQ(w.status, CompletionStatus::Success);
  EXPECT_EQ(ftl.stored_key(2), AccessKey(0x33));
  const Completion r = link.execute(frame(AtaCommand::ReadDmaExt, 16, 8, AccessKey(0x33)));
  EXPECT_EQ(r.status, CompletionStatus::Success);
  EXPECT_EQ(r.payload, Bytes(4096, 0x42));
  const Completion d = link.execute(frame(AtaCommand::ReadDmaExt, 16, 8, kNoKey));
  EXPECT_EQ(d.status, CompletionStatus::AccessDenied);
  EXPECT_TRUE(d.payload.empty());
  EXPECT_EQ(log.filter(LogLayer::Transport, LogEvent::Deny).size(), 1u);
}

TEST_F(LinkFixture, LbaMapsToHostPage) {
  EXPECT_EQ(link.lba_to_lpn(0x43000), 0x43000u / 8);
  EXPECT_EQ(link.lpn_to_lba(5), 40u);
}

TEST_F(LinkFixture, RejectsMisalignedTransfers) {
  EXPECT_EQ(code_of([&] { link.submit(frame(AtaCommand::ReadDmaExt, 3, 8, kNoKey)); }),
            ErrorCode::FieldOverflow);
  EXPECT_EQ(code_of([&] { link.submit(frame(AtaCommand::ReadDmaExt, 0, 7, kNoKey)); }),
            ErrorCode::FieldOverflow);
  EXPECT_EQ(code_of([&] { link.submit(frame(AtaCommand::WriteDmaExt, 0, 8, kNoKey), Bytes(10)); }),
            ErrorCode::FieldOverflow);
  EXPECT_EQ(link.pending(), 0u);
}

TEST_F(LinkFixture, RejectsUnknownCommand) {
  RegisterFis fis;
  fis.command = 0xEC;  // IDENTIFY
  fis.sector_count = 8;
  EXPECT_EQ(code_of([&] { link.submit(encode(fis)); }), ErrorCode::UnknownCommand);
}

TEST_F(LinkFixture, QueueCapacityAndFifo) {
  for (std::size_t i = 0; i < SataLink::kQueueCapacity; ++i) {
    link.submit(frame(AtaCommand::ReadDmaExt, i * 8, 8, kNoKey));
  }
  EXPECT_EQ(code_of([&] { link.submit(frame(AtaCommand::ReadDmaExt, 0, 8, kNoKey)); }),
            ErrorCode::QueueFull);
  const auto done = link.device_drain();
  ASSERT_EQ(done.size(), SataLink::kQueueCapacity);
  for (std::size_t i = 1; i < done.size(); ++i) {
    EXPECT_LT(done[i - 1].id, done[i].id);
    EXPECT_EQ(done[i].lba, i * 8);
  }
  EXPECT_EQ(link.pending(), 0u);
}

TEST_F(LinkFixture, TrimAndFlushCommands) {
  link.execute(frame(AtaCommand::WriteDmaExt, 0, 16, AccessKey(7)), Bytes(8192, 1));
  EXPECT_EQ(link.execute(frame(AtaCommand::DataSetManagement, 0, 16, kNoKey)).status,
            CompletionStatus::AccessDenied);
  EXPECT_EQ(link.execute(frame(AtaCommand::DataSetManagement, 0, 16, AccessKey(7))).status,
            CompletionStatus::Success);
  EXPECT_FALSE(ftl.stored_key(0).has_value());
  const std::uint64_t before = ftl.counters().flush_count;
  EXPECT_EQ(link.execute(frame(AtaCommand::FlushCacheExt, 0, 0, kNoKey)).status,
            CompletionStatus::Success);
  EXPECT_EQ(ftl.counters().flush_count, before + 1);
}

TEST_F(LinkFixture, OutOfRangeBecomesDeviceError) {
  const Lba past = link.lpn_to_lba(ftl.capacity());
  const Completion c = link.execute(frame(AtaCommand::ReadDmaExt, past, 8, kNoKey));
  EXPECT_EQ(c.status, CompletionStatus::DeviceError);
  EXPECT_FALSE(c.error.empty());
}

TEST_F(LinkFixture, ConcurrentSubmitters) {
  constexpr int kThreads = 4;
  constexpr int kEach = 16;
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < kEach; ++i) {
        link.submit(frame(AtaCommand::ReadDmaExt, (t * kEach + i) * 8, 8, kNoKey));
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(link.device_drain().size(), static_cast<std::size_t>(kThreads * kEach));
}
