#include "keyssd/key_ftl.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <map>

#include "keyssd/error.hpp"

namespace keyssd {

namespace {

constexpr std::uint32_t kNullSlot = AccessKey::kNoKeyWord;
constexpr std::uint32_t kUnmappedWord = 0xFFFFFFFFu;

void put_u16(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    p[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    p[i] = static_cast<std::uint8_t>(v >> (8 * i));
  }
}

std::uint16_t get_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) {
    v = (v << 8) | p[i];
  }
  return v;
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | p[i];
  }
  return v;
}

std::uint32_t checksum(std::span<const std::uint8_t> bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

class Fnv64 {
 public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (v >> (8 * i)) & 0xFF;
      hash_ *= 0x100000001b3ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 0xcbf29ce484222325ULL;
};

struct GcScope {
  explicit GcScope(bool& flag) : flag_(flag) { flag_ = true; }
  ~GcScope() { flag_ = false; }
  bool& flag_;
};

}  // namespace

KeyFtl::KeyFtl(FlashDevice& flash, FtlConfig config, EventLog* log)
    : flash_(flash), config_(config), geometry_(flash.geometry()), log_(log) {
  subpages_ = geometry_.subpages_per_page();
  validate_config();
  data_blocks_ = geometry_.blocks_per_device - config_.meta_blocks;
  exported_entries_ = (data_blocks_ - config_.spare_blocks) * geometry_.pages_per_block;
  const std::uint64_t slots = config_.variant == FtlVariant::KeyStatic ? subpages_ : 0;
  entry_bytes_ = 4 * (1 + slots);
  const std::uint64_t payload =
      geometry_.device_page_bytes - kMetaHeaderBytes - kMetaTrailerBytes;
  entries_per_page_ = payload / entry_bytes_;
  table_pages_ = (exported_entries_ + entries_per_page_ - 1) / entries_per_page_;
  meta_half_pages_ = config_.meta_blocks / 2 * geometry_.pages_per_block;

  if (table_pages_ + max_index_pages() + 1 > meta_half_pages_) {
    throw Error(ErrorCode::InvalidConfig,
                "metadata region too small for a full table image; raise meta_blocks");
  }
  recover();
}

void KeyFtl::validate_config() const {
  if (config_.lockout_threshold == 0) {
    throw Error(ErrorCode::InvalidConfig, "lockout threshold must be at least 1");
  }
  if (config_.meta_blocks < 2 || config_.meta_blocks % 2 != 0) {
    throw Error(ErrorCode::InvalidConfig, "meta_blocks must be even and at least 2");
  }
  if (config_.gc_watermark == 0 || config_.spare_blocks <= config_.gc_watermark) {
    throw Error(ErrorCode::InvalidConfig, "need 0 < gc_watermark < spare_blocks");
  }
  if (config_.meta_blocks + config_.spare_blocks >= geometry_.blocks_per_device) {
    throw Error(ErrorCode::InvalidConfig, "no data blocks left after reservations");
  }
  if (geometry_.total_pages() >= kUnmappedWord) {
    throw Error(ErrorCode::InvalidConfig, "device too large for 32-bit PPN entries");
  }
  if (geometry_.device_page_bytes <= kMetaHeaderBytes + kMetaTrailerBytes + 4 * (1 + subpages_)) {
    throw Error(ErrorCode::InvalidConfig, "device page too small for a mapping entry");
  }
}

std::uint64_t KeyFtl::max_index_pages() const {
  if (config_.variant != FtlVariant::KeyDynamic) {
    return 0;
  }
  // Worst case: every page locked under its own key (key, count, lpn).
  const std::uint64_t bytes = 4 + capacity() * 12;
  const std::uint64_t payload =
      geometry_.device_page_bytes - kMetaHeaderBytes - kMetaTrailerBytes;
  return (bytes + payload - 1) / payload;
}

void KeyFtl::require_mounted() const {
  if (!mounted_) {
    throw Error(ErrorCode::DeviceError, "ftl not mounted; call recover()");
  }
}

void KeyFtl::check_range(Lpn first, std::uint64_t count) const {
  if (count == 0 || first >= capacity() || count > capacity() - first) {
    throw Error(ErrorCode::OutOfRange,
                "lpn " + std::to_string(first) + " count " + std::to_string(count));
  }
}

void KeyFtl::reset_volatile() {
  map_.assign(exported_entries_, kUnmapped);
  keys_.assign(config_.variant == FtlVariant::KeyStatic ? capacity() : 0, kNullSlot);
  dirty_.assign(table_pages_, false);
  index_.clear();
  index_dirty_ = false;
  index_generation_ = 0;
  owner_.assign(data_blocks_ * geometry_.pages_per_block, kUnmapped);
  valid_count_.assign(data_blocks_, 0);
  block_free_.assign(data_blocks_, false);
  free_.clear();
  active_.reset();
  write_ptr_ = 0;
  last_victim_.reset();
  pending_invalid_.clear();
  meta_half_ = 0;
  meta_offset_ = 0;
  meta_seq_ = 1;
  invalid_attempts_ = 0;
  locked_out_ = false;
}

// --- authorization -------------------------------------------------------

KeyFtl::KeyCheck KeyFtl::check_key(Lpn lpn, AccessKey key) const {
  switch (config_.variant) {
    case FtlVariant::Baseline:
      return KeyCheck::Unkeyed;
    case FtlVariant::KeyStatic: {
      const std::uint32_t slot = keys_[lpn];
      if (slot == kNullSlot) {
        return KeyCheck::Unkeyed;
      }
      return slot == key.value() ? KeyCheck::Match : KeyCheck::Mismatch;
    }
    case FtlVariant::KeyDynamic:
      switch (index_.search(lpn, key)) {
        case LockSearch::Match:
          return KeyCheck::Match;
        case LockSearch::NotLocked:
          return KeyCheck::Unkeyed;
        case LockSearch::WrongKey:
          return KeyCheck::Mismatch;
      }
  }
  return KeyCheck::Mismatch;
}

Verdict KeyFtl::authorize_multi(Lpn first, std::uint64_t count, AccessKey key,
                                MultiMode mode) const {
  check_range(first, count);
  const std::uint64_t checked = mode == MultiMode::FirstLpnOnly ? 1 : count;
  for (std::uint64_t i = 0; i < checked; ++i) {
    if (check_key(first + i, key) == KeyCheck::Mismatch) {
      return Verdict::Denied;
    }
  }
  return Verdict::Granted;
}

Verdict KeyFtl::probe(Lpn lpn, AccessKey key) const {
  require_mounted();
  check_range(lpn, 1);
  return check_key(lpn, key) == KeyCheck::Mismatch ? Verdict::Denied : Verdict::Granted;
}

void KeyFtl::register_key(Lpn lpn, AccessKey key) {
  if (key.is_none()) {
    return;
  }
  switch (config_.variant) {
    case FtlVariant::Baseline:
      return;
    case FtlVariant::KeyStatic:
      if (keys_[lpn] == kNullSlot) {
        keys_[lpn] = key.value();
        mark_dirty(lpn / subpages_);
      }
      return;
    case FtlVariant::KeyDynamic:
      if (!index_.is_locked(lpn)) {
        index_.insert(lpn, key);
        index_dirty_ = true;
      }
      return;
  }
}

void KeyFtl::clear_key(Lpn lpn) {
  switch (config_.variant) {
    case FtlVariant::Baseline:
      return;
    case FtlVariant::KeyStatic:
      if (keys_[lpn] != kNullSlot) {
        keys_[lpn] = kNullSlot;
        mark_dirty(lpn / subpages_);
      }
      return;
    case FtlVariant::KeyDynamic:
      if (index_.remove(lpn)) {
        index_dirty_ = true;
      }
      return;
  }
}

LockoutOutcome KeyFtl::lockout_check_and_record(Verdict result) {
  if (locked_out_) {
    return LockoutOutcome::LockedOut;
  }
  if (result != Verdict::Denied) {
    return LockoutOutcome::Ok;
  }
  ++invalid_attempts_;
  if (invalid_attempts_ < config_.lockout_threshold) {
    return LockoutOutcome::Ok;
  }
  locked_out_ = true;
  log(LogEvent::Lockout, 0, kNoKey,
      "invalid_attempts=" + std::to_string(invalid_attempts_));
  append_meta({build_lockout_page()}, &counters_.meta_overhead_bytes);
  counters_.meta_overhead_bytes += geometry_.device_page_bytes;
  return LockoutOutcome::LockedOut;
}

void KeyFtl::admin_reset_lockout() {
  require_mounted();
  const bool was_locked = locked_out_;
  invalid_attempts_ = 0;
  locked_out_ = false;
  if (was_locked) {
    append_meta({build_lockout_page()}, &counters_.meta_overhead_bytes);
    counters_.meta_overhead_bytes += geometry_.device_page_bytes;
  }
}

Verdict KeyFtl::finish_command(Verdict verdict, Access access, Lpn first, std::uint64_t count,
                               AccessKey key, const char* op) {
  ++counters_.commands;
  if (verdict == Verdict::Granted) {
    ++counters_.grants;
  } else {
    ++counters_.denials;
  }
  const std::string detail =
      std::string(op) + (count > 1 ? " pages=" + std::to_string(count) : std::string());
  log(verdict == Verdict::Granted ? LogEvent::Grant : LogEvent::Deny, first, key, detail);
  (void)access;
  lockout_check_and_record(verdict);
  return verdict;
}

// --- data path -----------------------------------------------------------

Verdict KeyFtl::handle_write(Lpn lpn, AccessKey key, std::span<const std::uint8_t> data) {
  if (data.size() != geometry_.host_page_bytes) {
    throw Error(ErrorCode::BadPayloadSize, "single-page write needs one host page");
  }
  return write(lpn, key, data);
}

ReadResult KeyFtl::handle_read(Lpn lpn, AccessKey key) { return read(lpn, 1, key); }

Verdict KeyFtl::write(Lpn first, AccessKey key, std::span<const std::uint8_t> data) {
  require_mounted();
  if (data.empty() || data.size() % geometry_.host_page_bytes != 0) {
    throw Error(ErrorCode::BadPayloadSize, "write payload must be whole host pages");
  }
  const std::uint64_t count = data.size() / geometry_.host_page_bytes;
  check_range(first, count);
  if (locked_out_) {
    ++counters_.lockout_rejections;
    return Verdict::LockedOut;
  }
  const Verdict verdict = authorize_multi(first, count, key, config_.write_mode);
  if (verdict == Verdict::Granted) {
    for (std::uint64_t i = 0; i < count; ++i) {
      if (check_key(first + i, key) == KeyCheck::Unkeyed) {
        register_key(first + i, key);
      }
    }
    write_pages(first, data);
    counters_.host_pages_written += count;
  }
  return finish_command(verdict, Access::Write, first, count, key, "write");
}

ReadResult KeyFtl::read(Lpn first, std::uint64_t count, AccessKey key) {
  require_mounted();
  check_range(first, count);
  if (locked_out_) {
    ++counters_.lockout_rejections;
    return {Verdict::LockedOut, {}};
  }
  ReadResult result;
  result.verdict = authorize_multi(first, count, key, config_.effective_read_mode());
  if (result.verdict == Verdict::Granted) {
    const std::uint64_t hp = geometry_.host_page_bytes;
    result.data.assign(count * hp, 0xFF);
    Bytes page(geometry_.device_page_bytes);
    std::uint64_t i = 0;
    while (i < count) {
      const Lpn lpn = first + i;
      const std::uint64_t dlpn = lpn / subpages_;
      const std::uint64_t run = std::min(count - i, subpages_ - lpn % subpages_);
      if (map_[dlpn] != kUnmapped) {
        flash_.read_page_into(map_[dlpn], page);
        std::memcpy(result.data.data() + i * hp, page.data() + (lpn % subpages_) * hp, run * hp);
      }
      i += run;
    }
    counters_.host_pages_read += count;
  }
  finish_command(result.verdict, Access::Read, first, count, key, "read");
  return result;
}

Verdict KeyFtl::trim(Lpn first, std::uint64_t count, AccessKey key) {
  require_mounted();
  check_range(first, count);
  if (locked_out_) {
    ++counters_.lockout_rejections;
    return Verdict::LockedOut;
  }
  const Verdict verdict = authorize_multi(first, count, key, MultiMode::AllLpns);
  if (verdict == Verdict::Granted) {
    for (std::uint64_t i = 0; i < count; ++i) {
      clear_key(first + i);
    }
    const std::uint64_t first_full = (first + subpages_ - 1) / subpages_;
    const std::uint64_t end_full = (first + count) / subpages_;
    for (std::uint64_t dlpn = first_full; dlpn < end_full; ++dlpn) {
      if (map_[dlpn] != kUnmapped) {
        invalidate(map_[dlpn]);
        map_[dlpn] = kUnmapped;
        mark_dirty(dlpn);
      }
    }
    counters_.host_pages_trimmed += count;
  }
  return finish_command(verdict, Access::Write, first, count, key, "trim");
}

void KeyFtl::write_pages(Lpn first, std::span<const std::uint8_t> data) {
  const std::uint64_t hp = geometry_.host_page_bytes;
  const std::uint64_t count = data.size() / hp;
  Bytes page(geometry_.device_page_bytes);
  std::uint64_t i = 0;
  while (i < count) {
    const Lpn lpn = first + i;
    const std::uint64_t dlpn = lpn / subpages_;
    const std::uint64_t sub = lpn % subpages_;
    const std::uint64_t run = std::min(count - i, subpages_ - sub);

    // Allocation may run GC, which can relocate this entry's current page.
    const Ppn target = allocate_page();
    const Ppn old = map_[dlpn];
    if (old != kUnmapped && run != subpages_) {
      flash_.read_page_into(old, page);
    } else {
      std::fill(page.begin(), page.end(), 0xFF);
    }
    std::memcpy(page.data() + sub * hp, data.data() + i * hp, run * hp);
    flash_.program_page(target, page);
    if (old != kUnmapped) {
      invalidate(old);
    }
    map_[dlpn] = target;
    owner_[target] = dlpn;
    ++valid_count_[target / geometry_.pages_per_block];
    mark_dirty(dlpn);
    i += run;
  }
}

void KeyFtl::mark_dirty(std::uint64_t dlpn) { dirty_[dlpn / entries_per_page_] = true; }

void KeyFtl::invalidate(Ppn ppn) {
  --valid_count_[ppn / geometry_.pages_per_block];
  owner_[ppn] = kUnmapped;
  pending_invalid_.push_back(ppn);
}

Ppn KeyFtl::allocate_page() {
  const std::uint64_t ppb = geometry_.pages_per_block;
  if (!active_ || write_ptr_ == ppb) {
    active_.reset();
    if (!in_gc_) {
      collect_garbage();
    }
    if (!active_ || write_ptr_ == ppb) {
      if (free_.empty()) {
        throw Error(ErrorCode::NoSpace, "no free block for allocation");
      }
      active_ = free_.front();
      free_.pop_front();
      block_free_[*active_] = false;
      write_ptr_ = 0;
    }
  }
  return *active_ * ppb + write_ptr_++;
}

void KeyFtl::collect_garbage() {
  std::uint64_t guard = 2 * data_blocks_;
  while (free_.size() <= config_.gc_watermark && guard-- > 0) {
    try {
      gc_once();
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoSpace) {
        throw;
      }
      return;
    }
  }
}

std::uint64_t KeyFtl::run_gc() {
  require_mounted();
  return gc_once();
}

std::uint64_t KeyFtl::gc_once() {
  const std::uint64_t ppb = geometry_.pages_per_block;
  std::optional<BlockId> victim;
  for (BlockId b = 0; b < data_blocks_; ++b) {
    if (block_free_[b] || (active_ && *active_ == b)) {
      continue;
    }
    if (!victim || valid_count_[b] < valid_count_[*victim]) {
      victim = b;
    }
  }
  if (!victim) {
    throw Error(ErrorCode::NoSpace, "no GC candidate block");
  }
  const std::uint64_t valid = valid_count_[*victim];
  if (valid == ppb) {
    throw Error(ErrorCode::NoSpace, "every candidate block is fully valid");
  }
  const std::uint64_t room = (active_ ? ppb - write_ptr_ : 0) + free_.size() * ppb;
  if (room < valid) {
    throw Error(ErrorCode::NoSpace, "no room to relocate valid pages");
  }

  GcScope scope(in_gc_);
  std::uint64_t moved = 0;
  Bytes page(geometry_.device_page_bytes);
  const Ppn base = *victim * ppb;
  for (Ppn p = base; p < base + ppb; ++p) {
    const std::uint64_t dlpn = owner_[p];
    if (dlpn == kUnmapped) {
      continue;
    }
    const Ppn target = allocate_page();
    flash_.read_page_into(p, page);
    flash_.program_page(target, page);
    invalidate(p);
    map_[dlpn] = target;
    owner_[target] = dlpn;
    ++valid_count_[target / ppb];
    mark_dirty(dlpn);
    ++moved;
  }

  // The durable table must stop referencing the victim before it is erased.
  counters_.gc_sync_bytes += persist(false, &counters_.meta_overhead_bytes);

  flash_.erase_block(*victim);
  valid_count_[*victim] = 0;
  block_free_[*victim] = true;
  free_.push_back(*victim);
  last_victim_ = victim;
  ++counters_.gc_runs;
  counters_.gc_moves += moved;
  log(LogEvent::Gc, 0, kNoKey,
      "victim=" + std::to_string(*victim) + " moved=" + std::to_string(moved));
  return moved;
}

// --- flush and metadata log ----------------------------------------------

std::uint64_t KeyFtl::dirty_table_pages() const {
  return static_cast<std::uint64_t>(std::count(dirty_.begin(), dirty_.end(), true));
}

std::uint64_t KeyFtl::handle_flush(FlushMode mode) {
  require_mounted();
  counters_.dirty_pages_at_flush += dirty_table_pages();
  const std::uint64_t bytes =
      persist(mode == FlushMode::AllFlush, &counters_.meta_overhead_bytes);
  ++counters_.flush_count;
  counters_.flushed_bytes += bytes;
  counters_.flushed_table_pages += bytes / geometry_.device_page_bytes;
  log(LogEvent::Flush, 0, kNoKey,
      std::string(to_string(mode)) + " bytes=" + std::to_string(bytes));
  return bytes;
}

std::uint64_t KeyFtl::persist(bool all_pages, std::uint64_t* overhead_bytes) {
  std::vector<Bytes> pages;
  for (std::uint64_t t = 0; t < table_pages_; ++t) {
    if (all_pages || dirty_[t]) {
      pages.push_back(build_map_page(t));
    }
  }
  if (config_.variant == FtlVariant::KeyDynamic && (all_pages || index_dirty_)) {
    for (auto& p : build_index_pages(++index_generation_)) {
      pages.push_back(std::move(p));
    }
  }
  const std::uint64_t bytes = pages.size() * geometry_.device_page_bytes;
  if (!pages.empty()) {
    append_meta(std::move(pages), overhead_bytes);
  }
  std::fill(dirty_.begin(), dirty_.end(), false);
  index_dirty_ = false;
  apply_pending_invalidations();
  return bytes;
}

void KeyFtl::apply_pending_invalidations() {
  for (Ppn ppn : pending_invalid_) {
    flash_.mark_invalid(ppn);
  }
  pending_invalid_.clear();
}

void KeyFtl::seal_meta_page(Bytes& page, const MetaPageHeader& h) const {
  std::uint8_t* p = page.data();
  put_u32(p, kMetaMagic);
  put_u16(p + 4, static_cast<std::uint16_t>(h.kind));
  put_u16(p + 6, 0);
  put_u64(p + 8, h.seq);
  put_u32(p + 16, h.index);
  put_u32(p + 20, h.count);
  put_u64(p + 24, h.generation);
  const std::size_t body = page.size() - kMetaTrailerBytes;
  put_u32(p + body, checksum({p, body}));
}

std::optional<KeyFtl::MetaPageHeader> KeyFtl::parse_meta_page(std::span<const std::uint8_t> page,
                                                              Ppn ppn) const {
  const std::uint8_t* p = page.data();
  if (get_u32(p) != kMetaMagic) {
    throw Error(ErrorCode::CorruptImage, "bad metadata magic at ppn " + std::to_string(ppn));
  }
  const std::size_t body = page.size() - kMetaTrailerBytes;
  if (get_u32(p + body) != checksum(page.first(body))) {
    throw Error(ErrorCode::CorruptImage, "checksum mismatch at ppn " + std::to_string(ppn));
  }
  MetaPageHeader h;
  const std::uint16_t kind = get_u16(p + 4);
  if (kind < 1 || kind > 3) {
    throw Error(ErrorCode::CorruptImage, "unknown metadata kind at ppn " + std::to_string(ppn));
  }
  h.kind = static_cast<MetaKind>(kind);
  h.seq = get_u64(p + 8);
  h.index = get_u32(p + 16);
  h.count = get_u32(p + 20);
  h.generation = get_u64(p + 24);
  return h;
}

Bytes KeyFtl::build_map_page(std::uint64_t table_page) const {
  Bytes page(geometry_.device_page_bytes, 0xFF);
  const std::uint64_t first = table_page * entries_per_page_;
  const std::uint64_t count = std::min(entries_per_page_, exported_entries_ - first);
  std::uint8_t* out = page.data() + kMetaHeaderBytes;
  const bool keyed = config_.variant == FtlVariant::KeyStatic;
  for (std::uint64_t e = first; e < first + count; ++e) {
    const Ppn ppn = map_[e];
    put_u32(out, ppn == kUnmapped ? kUnmappedWord : static_cast<std::uint32_t>(ppn));
    out += 4;
    if (keyed) {
      for (std::uint64_t s = 0; s < subpages_; ++s) {
        put_u32(out, keys_[e * subpages_ + s]);
        out += 4;
      }
    }
  }
  MetaPageHeader h;
  h.kind = MetaKind::MapPage;
  h.index = static_cast<std::uint32_t>(table_page);
  h.count = static_cast<std::uint32_t>(count);
  seal_meta_page(page, h);
  return page;
}

std::vector<Bytes> KeyFtl::build_index_pages(std::uint64_t generation) const {
  Bytes stream;
  auto push = [&stream](std::uint32_t v) {
    std::uint8_t b[4];
    put_u32(b, v);
    stream.insert(stream.end(), b, b + 4);
  };
  const auto records = index_.records();
  push(static_cast<std::uint32_t>(records.size()));
  for (const auto& [key, lpns] : records) {
    push(key.value());
    push(static_cast<std::uint32_t>(lpns.size()));
    for (Lpn lpn : lpns) {
      push(static_cast<std::uint32_t>(lpn));
    }
  }
  const std::uint64_t payload =
      geometry_.device_page_bytes - kMetaHeaderBytes - kMetaTrailerBytes;
  const std::uint64_t n = (stream.size() + payload - 1) / payload;
  std::vector<Bytes> pages;
  for (std::uint64_t i = 0; i < n; ++i) {
    Bytes page(geometry_.device_page_bytes, 0xFF);
    const std::uint64_t off = i * payload;
    const std::uint64_t len = std::min<std::uint64_t>(payload, stream.size() - off);
    std::memcpy(page.data() + kMetaHeaderBytes, stream.data() + off, len);
    MetaPageHeader h;
    h.kind = MetaKind::IndexPage;
    h.index = static_cast<std::uint32_t>(i);
    h.count = static_cast<std::uint32_t>(n);
    h.generation = generation;
    seal_meta_page(page, h);
    pages.push_back(std::move(page));
  }
  return pages;
}

Bytes KeyFtl::build_lockout_page() const {
  Bytes page(geometry_.device_page_bytes, 0xFF);
  MetaPageHeader h;
  h.kind = MetaKind::Lockout;
  h.index = locked_out_ ? 1 : 0;
  h.generation = invalid_attempts_;
  seal_meta_page(page, h);
  return page;
}

std::vector<Bytes> KeyFtl::build_full_image() {
  std::vector<Bytes> pages;
  for (std::uint64_t t = 0; t < table_pages_; ++t) {
    pages.push_back(build_map_page(t));
  }
  if (config_.variant == FtlVariant::KeyDynamic) {
    for (auto& p : build_index_pages(++index_generation_)) {
      pages.push_back(std::move(p));
    }
  }
  pages.push_back(build_lockout_page());
  return pages;
}

bool KeyFtl::append_meta(std::vector<Bytes> pages, std::uint64_t* overhead_bytes) {
  if (meta_offset_ + pages.size() > meta_half_pages_) {
    compact_meta(overhead_bytes);
    return true;
  }
  const Ppn base = data_blocks_ * geometry_.pages_per_block + meta_half_ * meta_half_pages_;
  for (Bytes& page : pages) {
    // Stamp the sequence number, then re-seal the checksum.
    put_u64(page.data() + 8, meta_seq_++);
    const std::size_t body = page.size() - kMetaTrailerBytes;
    put_u32(page.data() + body, checksum({page.data(), body}));
    flash_.program_page(base + meta_offset_++, page);
  }
  return false;
}

void KeyFtl::compact_meta(std::uint64_t* overhead_bytes) {
  // Everything volatile goes into the other half, so the current half
  // becomes entirely stale.
  meta_half_ ^= 1;
  meta_offset_ = 0;
  const std::uint64_t first_block =
      data_blocks_ + meta_half_ * (config_.meta_blocks / 2);
  for (BlockId b = first_block; b < first_block + config_.meta_blocks / 2; ++b) {
    flash_.erase_block(b);
  }
  std::vector<Bytes> image = build_full_image();
  if (overhead_bytes != nullptr) {
    *overhead_bytes += image.size() * geometry_.device_page_bytes;
  }
  append_meta(std::move(image), nullptr);
  std::fill(dirty_.begin(), dirty_.end(), false);
  index_dirty_ = false;
}

// --- power loss ----------------------------------------------------------

void KeyFtl::power_cut() {
  flash_.power_cycle();
  reset_volatile();
  counters_ = {};
  index_.reset_counters();
  mounted_ = false;
}

void KeyFtl::recover() {
  reset_volatile();
  const std::uint64_t ppb = geometry_.pages_per_block;
  const Ppn meta_base = data_blocks_ * ppb;

  struct Copy {
    std::uint64_t seq = 0;
    Ppn ppn = kUnmapped;
  };
  std::vector<Copy> map_copies(table_pages_);
  struct Generation {
    std::uint32_t count = 0;
    std::map<std::uint32_t, Ppn> pages;
  };
  std::map<std::uint64_t, Generation> generations;
  std::optional<std::pair<std::uint64_t, MetaPageHeader>> lockout;
  std::uint64_t max_seq = 0;
  std::uint64_t max_half = 0;
  std::uint64_t programmed[2] = {0, 0};
  std::uint64_t max_generation = 0;

  Bytes page(geometry_.device_page_bytes);
  for (std::uint64_t half = 0; half < 2; ++half) {
    for (std::uint64_t i = 0; i < meta_half_pages_; ++i) {
      const Ppn ppn = meta_base + half * meta_half_pages_ + i;
      if (flash_.page_state(ppn) == PageState::Erased) {
        continue;
      }
      programmed[half] = i + 1;
      flash_.read_page_into(ppn, page);
      const MetaPageHeader h = *parse_meta_page(page, ppn);
      if (h.seq > max_seq) {
        max_seq = h.seq;
        max_half = half;
      }
      switch (h.kind) {
        case MetaKind::MapPage:
          if (h.index >= table_pages_) {
            throw Error(ErrorCode::CorruptImage, "map page index out of range");
          }
          if (h.seq > map_copies[h.index].seq) {
            map_copies[h.index] = {h.seq, ppn};
          }
          break;
        case MetaKind::IndexPage: {
          auto& gen = generations[h.generation];
          gen.count = h.count;
          gen.pages[h.index] = ppn;
          max_generation = std::max(max_generation, h.generation);
          break;
        }
        case MetaKind::Lockout:
          if (!lockout || h.seq > lockout->first) {
            lockout = {h.seq, h};
          }
          break;
      }
    }
  }

  const bool keyed = config_.variant == FtlVariant::KeyStatic;
  for (std::uint64_t t = 0; t < table_pages_; ++t) {
    if (map_copies[t].ppn == kUnmapped) {
      continue;
    }
    flash_.read_page_into(map_copies[t].ppn, page);
    const std::uint64_t first = t * entries_per_page_;
    const std::uint64_t count = std::min(entries_per_page_, exported_entries_ - first);
    if (get_u32(page.data() + 20) != count) {
      throw Error(ErrorCode::CorruptImage, "map page entry count mismatch");
    }
    const std::uint8_t* in = page.data() + kMetaHeaderBytes;
    for (std::uint64_t e = first; e < first + count; ++e) {
      const std::uint32_t word = get_u32(in);
      in += 4;
      map_[e] = word == kUnmappedWord ? kUnmapped : word;
      if (keyed) {
        for (std::uint64_t s = 0; s < subpages_; ++s) {
          keys_[e * subpages_ + s] = get_u32(in);
          in += 4;
        }
      }
    }
  }

  if (config_.variant == FtlVariant::KeyDynamic) {
    for (auto it = generations.rbegin(); it != generations.rend(); ++it) {
      const Generation& gen = it->second;
      if (gen.count == 0 || gen.pages.size() != gen.count) {
        continue;
      }
      Bytes stream;
      const std::uint64_t payload =
          geometry_.device_page_bytes - kMetaHeaderBytes - kMetaTrailerBytes;
      for (const auto& [idx, ppn] : gen.pages) {
        flash_.read_page_into(ppn, page);
        stream.insert(stream.end(), page.begin() + kMetaHeaderBytes,
                      page.begin() + kMetaHeaderBytes + payload);
      }
      std::size_t pos = 0;
      auto next = [&]() {
        if (pos + 4 > stream.size()) {
          throw Error(ErrorCode::CorruptImage, "truncated lock index image");
        }
        const std::uint32_t v = get_u32(stream.data() + pos);
        pos += 4;
        return v;
      };
      const std::uint32_t records = next();
      for (std::uint32_t r = 0; r < records; ++r) {
        const AccessKey key{next()};
        const std::uint32_t n = next();
        for (std::uint32_t j = 0; j < n; ++j) {
          const Lpn lpn = next();
          if (lpn >= capacity() || key.is_none()) {
            throw Error(ErrorCode::CorruptImage, "bad lock index record");
          }
          try {
            index_.insert(lpn, key);
          } catch (const Error&) {
            throw Error(ErrorCode::CorruptImage, "lpn locked twice in index image");
          }
        }
      }
      break;
    }
    index_generation_ = max_generation;
    index_.reset_counters();
  }

  if (lockout) {
    locked_out_ = lockout->second.index != 0;
    invalid_attempts_ = locked_out_ ? lockout->second.generation : 0;
  }

  if (max_seq > 0) {
    meta_half_ = max_half;
    meta_offset_ = programmed[max_half];
    meta_seq_ = max_seq + 1;
  }

  for (std::uint64_t dlpn = 0; dlpn < exported_entries_; ++dlpn) {
    const Ppn ppn = map_[dlpn];
    if (ppn == kUnmapped) {
      continue;
    }
    if (ppn >= owner_.size() || flash_.page_state(ppn) != PageState::Programmed ||
        owner_[ppn] != kUnmapped) {
      throw Error(ErrorCode::CorruptImage, "mapping references an unusable page");
    }
    owner_[ppn] = dlpn;
    ++valid_count_[ppn / ppb];
  }
  for (BlockId b = 0; b < data_blocks_; ++b) {
    bool erased = true;
    for (Ppn p = b * ppb; p < (b + 1) * ppb; ++p) {
      const PageState state = flash_.page_state(p);
      if (state != PageState::Erased) {
        erased = false;
      }
      if (state == PageState::Programmed && owner_[p] == kUnmapped) {
        flash_.mark_invalid(p);
      }
    }
    if (erased) {
      block_free_[b] = true;
      free_.push_back(b);
    }
  }
  mounted_ = true;
}

// --- inspection ----------------------------------------------------------

std::optional<AccessKey> KeyFtl::stored_key(Lpn lpn) const {
  check_range(lpn, 1);
  switch (config_.variant) {
    case FtlVariant::Baseline:
      return std::nullopt;
    case FtlVariant::KeyStatic:
      if (keys_[lpn] == kNullSlot) {
        return std::nullopt;
      }
      return AccessKey{keys_[lpn]};
    case FtlVariant::KeyDynamic:
      for (const auto& [key, lpns] : index_.records()) {
        if (std::binary_search(lpns.begin(), lpns.end(), lpn)) {
          return key;
        }
      }
      return std::nullopt;
  }
  return std::nullopt;
}

std::uint64_t KeyFtl::key_digest() const {
  Fnv64 h;
  if (config_.variant == FtlVariant::KeyStatic) {
    for (std::uint32_t k : keys_) {
      h.add(k);
    }
  } else if (config_.variant == FtlVariant::KeyDynamic) {
    for (const auto& [key, lpns] : index_.records()) {
      h.add(key.value());
      for (Lpn lpn : lpns) {
        h.add(lpn);
      }
    }
  }
  return h.value();
}

std::uint64_t KeyFtl::table_digest() const {
  Fnv64 h;
  for (Ppn p : map_) {
    h.add(p);
  }
  h.add(key_digest());
  return h.value();
}

void KeyFtl::log(LogEvent event, Lpn lpn, AccessKey key, std::string detail) {
  if (log_ == nullptr) {
    return;
  }
  LogRecord r;
  r.ts = counters_.commands;
  r.layer = LogLayer::Ftl;
  r.event = event;
  r.lba = lpn * geometry_.sectors_per_host_page();
  r.key = key;
  r.detail = std::move(detail);
  log_->append(std::move(r));
}

}  // namespace keyssd
