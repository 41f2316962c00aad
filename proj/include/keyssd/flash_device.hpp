#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "keyssd/types.hpp"

namespace keyssd {

struct FlashGeometry {
  std::uint64_t blocks_per_device = 64;
  std::uint64_t pages_per_block = 128;
  std::uint64_t device_page_bytes = 32768;
  std::uint64_t host_page_bytes = 4096;
  std::uint64_t sector_bytes = 512;

  std::uint64_t total_pages() const { return blocks_per_device * pages_per_block; }
  std::uint64_t subpages_per_page() const { return device_page_bytes / host_page_bytes; }
  std::uint64_t sectors_per_host_page() const { return host_page_bytes / sector_bytes; }

  /// Throws InvalidConfig unless the page-size ratios hold.
  void validate() const;

  friend bool operator==(const FlashGeometry&, const FlashGeometry&) = default;
};

enum class PageState : std::uint8_t { Erased = 0, Programmed = 1, Invalid = 2 };

struct FlashCounters {
  std::uint64_t reads = 0;
  std::uint64_t programs = 0;
  std::uint64_t erases = 0;
};

/// In-memory NAND model: program-once pages, whole-block erase.
///
/// Page payloads are allocated on first program, so a large mostly-erased
/// device stays cheap. Counters are per boot; `power_cycle` zeroes them.
class FlashDevice {
 public:
  explicit FlashDevice(FlashGeometry geometry);

  const FlashGeometry& geometry() const { return geometry_; }

  void program_page(Ppn ppn, std::span<const std::uint8_t> data);
  Bytes read_page(Ppn ppn);
  /// Same as read_page, but into caller storage of device_page_bytes.
  void read_page_into(Ppn ppn, std::span<std::uint8_t> out);
  void erase_block(BlockId block);

  /// Marks a programmed page as holding stale data. Reads still return the
  /// stored bytes; only the state byte changes.
  void mark_invalid(Ppn ppn);

  void power_cycle();

  PageState page_state(Ppn ppn) const;
  const FlashCounters& counters() const { return counters_; }

  void save_snapshot(std::ostream& out) const;
  static FlashDevice load_snapshot(std::istream& in);

  static constexpr char kSnapshotMagic[8] = {'K', 'S', 'S', 'D', 'F', 'L', 'S', 'H'};

 private:
  struct Page {
    PageState state = PageState::Erased;
    std::unique_ptr<std::uint8_t[]> data;
  };

  void check_ppn(Ppn ppn) const;

  FlashGeometry geometry_;
  std::vector<Page> pages_;
  FlashCounters counters_;
};

}  // namespace keyssd
