#include "keyssd/flash_device.hpp"

#include <algorithm>
#include <cstring>
#include <istream>
#include <ostream>

#include "keyssd/error.hpp"

namespace keyssd {

namespace {

constexpr std::uint8_t kErasedByte = 0xFF;

void put_u64(std::ostream& out, std::uint64_t v) {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) {
    buf[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
  out.write(reinterpret_cast<const char*>(buf), 8);
}

std::uint64_t get_u64(std::istream& in) {
  std::uint8_t buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) {
    throw Error(ErrorCode::BadSnapshot, "truncated geometry header");
  }
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | buf[i];
  }
  return v;
}

}  // namespace

void FlashGeometry::validate() const {
  if (blocks_per_device == 0 || pages_per_block == 0) {
    throw Error(ErrorCode::InvalidConfig, "geometry needs at least one block and one page");
  }
  if (host_page_bytes == 0 || sector_bytes == 0 || device_page_bytes == 0) {
    throw Error(ErrorCode::InvalidConfig, "page and sector sizes must be nonzero");
  }
  if (device_page_bytes % host_page_bytes != 0) {
    throw Error(ErrorCode::InvalidConfig, "device page must be a multiple of the host page");
  }
  if (host_page_bytes % sector_bytes != 0) {
    throw Error(ErrorCode::InvalidConfig, "host page must be a multiple of the sector size");
  }
}

FlashDevice::FlashDevice(FlashGeometry geometry) : geometry_(geometry) {
  geometry_.validate();
  pages_.resize(geometry_.total_pages());
}

void FlashDevice::check_ppn(Ppn ppn) const {
  if (ppn >= pages_.size()) {
    throw Error(ErrorCode::OutOfRange, "ppn " + std::to_string(ppn));
  }
}

void FlashDevice::program_page(Ppn ppn, std::span<const std::uint8_t> data) {
  check_ppn(ppn);
  if (data.size() != geometry_.device_page_bytes) {
    throw Error(ErrorCode::BadPayloadSize, "payload of " + std::to_string(data.size()) + " bytes");
  }
  Page& page = pages_[ppn];
  if (page.state != PageState::Erased) {
    throw Error(ErrorCode::ProgramOnDirtyPage, "ppn " + std::to_string(ppn));
  }
  if (!page.data) {
    page.data = std::make_unique<std::uint8_t[]>(geometry_.device_page_bytes);
  }
  std::memcpy(page.data.get(), data.data(), data.size());
  page.state = PageState::Programmed;
  ++counters_.programs;
}

Bytes FlashDevice::read_page(Ppn ppn) {
  Bytes out(geometry_.device_page_bytes);
  read_page_into(ppn, out);
  return out;
}

void FlashDevice::read_page_into(Ppn ppn, std::span<std::uint8_t> out) {
  check_ppn(ppn);
  if (out.size() != geometry_.device_page_bytes) {
    throw Error(ErrorCode::BadPayloadSize, "read buffer of " + std::to_string(out.size()));
  }
  const Page& page = pages_[ppn];
  if (page.state == PageState::Erased || !page.data) {
    std::fill(out.begin(), out.end(), kErasedByte);
  } else {
    std::memcpy(out.data(), page.data.get(), out.size());
  }
  ++counters_.reads;
}

void FlashDevice::erase_block(BlockId block) {
  if (block >= geometry_.blocks_per_device) {
    throw Error(ErrorCode::OutOfRange, "block " + std::to_string(block));
  }
  const Ppn first = block * geometry_.pages_per_block;
  for (Ppn p = first; p < first + geometry_.pages_per_block; ++p) {
    pages_[p].state = PageState::Erased;
    pages_[p].data.reset();
  }
  ++counters_.erases;
}

void FlashDevice::mark_invalid(Ppn ppn) {
  check_ppn(ppn);
  if (pages_[ppn].state == PageState::Programmed) {
    pages_[ppn].state = PageState::Invalid;
  }
}

void FlashDevice::power_cycle() { counters_ = {}; }

PageState FlashDevice::page_state(Ppn ppn) const {
  check_ppn(ppn);
  return pages_[ppn].state;
}

void FlashDevice::save_snapshot(std::ostream& out) const {
  out.write(kSnapshotMagic, sizeof(kSnapshotMagic));
  put_u64(out, geometry_.blocks_per_device);
  put_u64(out, geometry_.pages_per_block);
  put_u64(out, geometry_.device_page_bytes);
  put_u64(out, geometry_.host_page_bytes);
  for (const Page& page : pages_) {
    const auto state = static_cast<char>(page.state);
    out.put(state);
    if (page.state == PageState::Programmed) {
      out.write(reinterpret_cast<const char*>(page.data.get()),
                static_cast<std::streamsize>(geometry_.device_page_bytes));
    }
  }
  if (!out) {
    throw Error(ErrorCode::BadSnapshot, "write failed");
  }
}

FlashDevice FlashDevice::load_snapshot(std::istream& in) {
  char magic[sizeof(kSnapshotMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kSnapshotMagic, sizeof(magic)) != 0) {
    throw Error(ErrorCode::BadSnapshot, "bad magic");
  }
  FlashGeometry g;
  g.blocks_per_device = get_u64(in);
  g.pages_per_block = get_u64(in);
  g.device_page_bytes = get_u64(in);
  g.host_page_bytes = get_u64(in);
  try {
    g.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadSnapshot, e.detail());
  }
  FlashDevice dev(g);
  for (Page& page : dev.pages_) {
    const int state = in.get();
    if (state == std::char_traits<char>::eof()) {
      throw Error(ErrorCode::BadSnapshot, "truncated page records");
    }
    if (state > static_cast<int>(PageState::Invalid)) {
      throw Error(ErrorCode::BadSnapshot, "bad page state " + std::to_string(state));
    }
    page.state = static_cast<PageState>(state);
    if (page.state == PageState::Programmed) {
      page.data = std::make_unique<std::uint8_t[]>(g.device_page_bytes);
      if (!in.read(reinterpret_cast<char*>(page.data.get()),
                   static_cast<std::streamsize>(g.device_page_bytes))) {
        throw Error(ErrorCode::BadSnapshot, "truncated page payload");
      }
    }
  }
  return dev;
}

}  // namespace keyssd
