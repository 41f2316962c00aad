#include <sstream>

#include <gtest/gtest.h>

#include "keyssd/error.hpp"
#include "keyssd/flash_device.hpp"

using namespace keyssd;

namespace {

FlashGeometry tiny() {
  FlashGeometry g;
  g.blocks_per_device = 4;
  g.pages_per_block = 8;
  return g;
}

Bytes filled(const FlashGeometry& g, std::uint8_t v) { return Bytes(g.device_page_bytes, v); }

}  // namespace

TEST(FlashGeometry, DefaultRatios) {
  FlashGeometry g;
  EXPECT_EQ(g.subpages_per_page(), 8u);
  EXPECT_EQ(g.sectors_per_host_page(), 8u);
  EXPECT_EQ(g.total_pages(), 64u * 128u);
  EXPECT_NO_THROW(g.validate());
}

TEST(FlashGeometry, RejectsBadRatio) {
  FlashGeometry g;
  g.host_page_bytes = 3000;
  EXPECT_THROW(g.validate(), Error);
  g = FlashGeometry{};
  g.blocks_per_device = 0;
  EXPECT_THROW(g.validate(), Error);
}

TEST(FlashDevice, ProgramOnceUntilErase) {
  FlashDevice dev(tiny());
  dev.program_page(3, filled(dev.geometry(), 0xAB));
  EXPECT_EQ(dev.page_state(3), PageState::Programmed);
  try {
    dev.program_page(3, filled(dev.geometry(), 0xCD));
    FAIL() << "second program accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProgramOnDirtyPage);
  }
  dev.erase_block(0);
  EXPECT_EQ(dev.page_state(3), PageState::Erased);
  dev.program_page(3, filled(dev.geometry(), 0xCD));
  EXPECT_EQ(dev.read_page(3)[17], 0xCD);
}

TEST(FlashDevice, ErasedPagesReadAsOnes) {
  FlashDevice dev(tiny());
  const Bytes page = dev.read_page(5);
  ASSERT_EQ(page.size(), dev.geometry().device_page_bytes);
  EXPECT_EQ(page.front(), 0xFF);
  EXPECT_EQ(page.back(), 0xFF);
}

TEST(FlashDevice, RangeAndSizeChecks) {
  FlashDevice dev(tiny());
  const auto code_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::ConfigError;
  };
  EXPECT_EQ(code_of([&] { dev.read_page(32); }), ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([&] { dev.erase_block(4); }), ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([&] { dev.program_page(0, Bytes(100)); }), ErrorCode::BadPayloadSize);
}

TEST(FlashDevice, InvalidKeepsBytes) {
  FlashDevice dev(tiny());
  dev.program_page(9, filled(dev.geometry(), 0x11));
  dev.mark_invalid(9);
  EXPECT_EQ(dev.page_state(9), PageState::Invalid);
  EXPECT_EQ(dev.read_page(9)[0], 0x11);
}

TEST(FlashDevice, CountersAndPowerCycle) {
  FlashDevice dev(tiny());
  dev.program_page(0, filled(dev.geometry(), 1));
  dev.read_page(0);
  dev.read_page(0);
  dev.erase_block(1);
  EXPECT_EQ(dev.counters().programs, 1u);
  EXPECT_EQ(dev.counters().reads, 2u);
  EXPECT_EQ(dev.counters().erases, 1u);
  dev.power_cycle();
  EXPECT_EQ(dev.counters().reads, 0u);
  EXPECT_EQ(dev.read_page(0)[0], 1);
}

TEST(FlashDevice, SnapshotRoundTrip) {
  FlashDevice dev(tiny());
  dev.program_page(2, filled(dev.geometry(), 0x5A));
  dev.program_page(9, filled(dev.geometry(), 0xA5));
  dev.mark_invalid(9);
  std::stringstream buf;
  dev.save_snapshot(buf);
  FlashDevice back = FlashDevice::load_snapshot(buf);
  EXPECT_EQ(back.geometry(), dev.geometry());
  EXPECT_EQ(back.page_state(2), PageState::Programmed);
  EXPECT_EQ(back.page_state(9), PageState::Invalid);
  EXPECT_EQ(back.page_state(3), PageState::Erased);
  EXPECT_EQ(back.read_page(2), dev.read_page(2));
}

TEST(FlashDevice, SnapshotRejectsGarbage) {
  std::stringstream buf("not a flash image at all");
  try {
    FlashDevice::load_snapshot(buf);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadSnapshot);
  }
}
