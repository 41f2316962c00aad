#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "keyssd/event_log.hpp"
#include "keyssd/flash_device.hpp"
#include "keyssd/key_lock_index.hpp"
#include "keyssd/types.hpp"

namespace keyssd {

struct FtlConfig {
  FtlVariant variant = FtlVariant::KeyStatic;
  /// Blocks reserved at the end of the device for the mapping-table log.
  /// Split into two halves that alternate on compaction, so must be even.
  std::uint64_t meta_blocks = 8;
  /// Data blocks held back from the exported capacity for GC headroom.
  std::uint64_t spare_blocks = 4;
  /// GC runs when the free data-block count drops to this value.
  std::uint64_t gc_watermark = 2;
  /// Denied commands tolerated before the device refuses all traffic.
  std::uint64_t lockout_threshold = 64;
  /// Unset means the variant default: FirstLpnOnly for KeyDynamic,
  /// AllLpns otherwise.
  std::optional<MultiMode> read_mode;
  MultiMode write_mode = MultiMode::AllLpns;
  /// Mode used when a FLUSH command arrives over the wire.
  FlushMode flush_mode = FlushMode::SelectiveFlush;

  MultiMode effective_read_mode() const {
    if (read_mode) {
      return *read_mode;
    }
    return variant == FtlVariant::KeyDynamic ? MultiMode::FirstLpnOnly : MultiMode::AllLpns;
  }
};

enum class Verdict { Granted, Denied, LockedOut };
enum class Access { Read, Write };
enum class LockoutOutcome { Ok, LockedOut };

struct ReadResult {
  Verdict verdict = Verdict::Denied;
  Bytes data;
};

struct FtlCounters {
  std::uint64_t commands = 0;
  std::uint64_t grants = 0;
  std::uint64_t denials = 0;
  std::uint64_t lockout_rejections = 0;
  std::uint64_t host_pages_read = 0;
  std::uint64_t host_pages_written = 0;
  std::uint64_t host_pages_trimmed = 0;
  std::uint64_t flush_count = 0;
  /// Mapping-table bytes written by FLUSH, per the flush policy.
  std::uint64_t flushed_bytes = 0;
  std::uint64_t flushed_table_pages = 0;
  /// Dirty table pages observed at each flush, summed.
  std::uint64_t dirty_pages_at_flush = 0;
  /// Table pages persisted by GC before it erases a victim.
  std::uint64_t gc_sync_bytes = 0;
  /// Lockout records and metadata-log compaction.
  std::uint64_t meta_overhead_bytes = 0;
  std::uint64_t gc_runs = 0;
  std::uint64_t gc_moves = 0;
};

/// Page-mapped FTL with per-host-page key authentication.
///
/// Keys are checked per 4 KiB host page. `KeyStatic` keeps a key slot for
/// every host page inside each mapping entry; `KeyDynamic` keeps only
/// locked pages in a `KeyLockIndex`; `Baseline` performs no checks.
///
/// The mapping table (and, for `KeyDynamic`, the lock index) lives in RAM
/// and reaches flash only through `handle_flush`, GC syncs, and lockout
/// records. `power_cut` drops everything volatile; `recover` rebuilds it
/// from the newest durable image.
class KeyFtl {
 public:
  KeyFtl(FlashDevice& flash, FtlConfig config, EventLog* log = nullptr);

  KeyFtl(const KeyFtl&) = delete;
  KeyFtl& operator=(const KeyFtl&) = delete;

  const FtlConfig& config() const { return config_; }
  const FlashGeometry& geometry() const { return geometry_; }

  /// Exported capacity in host pages.
  Lpn capacity() const { return exported_entries_ * subpages_; }

  Verdict handle_write(Lpn lpn, AccessKey key, std::span<const std::uint8_t> data);
  ReadResult handle_read(Lpn lpn, AccessKey key);

  /// Multi-page forms. `data` must be a whole number of host pages.
  Verdict write(Lpn first, AccessKey key, std::span<const std::uint8_t> data);
  ReadResult read(Lpn first, std::uint64_t count, AccessKey key);
  /// Releases pages: clears their keys and unmaps fully covered device
  /// pages. Authorized like a write.
  Verdict trim(Lpn first, std::uint64_t count, AccessKey key);

  /// Pure authorization decision; no counters or state change besides the
  /// lock index search counter.
  Verdict authorize_multi(Lpn first, std::uint64_t count, AccessKey key, MultiMode mode) const;

  /// Single-page verdict without side effects, ignoring lockout.
  Verdict probe(Lpn lpn, AccessKey key) const;

  std::uint64_t handle_flush(FlushMode mode);
  std::uint64_t handle_flush() { return handle_flush(config_.flush_mode); }

  /// Drops all volatile state and power-cycles the flash.
  void power_cut();
  void recover();
  bool mounted() const { return mounted_; }

  std::uint64_t run_gc();

  LockoutOutcome lockout_check_and_record(Verdict result);
  void admin_reset_lockout();
  bool locked_out() const { return locked_out_; }
  std::uint64_t invalid_attempts() const { return invalid_attempts_; }

  /// Registered key of a host page, or nullopt for a NULL slot.
  std::optional<AccessKey> stored_key(Lpn lpn) const;
  std::uint64_t key_digest() const;
  std::uint64_t table_digest() const;

  std::uint64_t table_pages() const { return table_pages_; }
  std::uint64_t entries_per_table_page() const { return entries_per_page_; }
  std::uint64_t entry_bytes() const { return entry_bytes_; }
  std::uint64_t dirty_table_pages() const;
  bool index_dirty() const { return index_dirty_; }

  std::uint64_t data_blocks() const { return data_blocks_; }
  std::uint64_t free_blocks() const { return free_.size(); }
  std::uint64_t valid_pages(BlockId block) const { return valid_count_.at(block); }
  std::optional<BlockId> last_gc_victim() const { return last_victim_; }

  const FtlCounters& counters() const { return counters_; }
  KeyLockIndex& lock_index() { return index_; }
  const KeyLockIndex& lock_index() const { return index_; }
  FlashDevice& flash() { return flash_; }

  static constexpr std::uint32_t kMetaMagic = 0x4B4D4554;  // "TEMK" little-endian
  static constexpr std::uint64_t kMetaHeaderBytes = 32;
  static constexpr std::uint64_t kMetaTrailerBytes = 4;

 private:
  enum class KeyCheck { Unkeyed, Match, Mismatch };
  enum class MetaKind : std::uint16_t { MapPage = 1, IndexPage = 2, Lockout = 3 };

  struct MetaPageHeader {
    MetaKind kind = MetaKind::MapPage;
    std::uint64_t seq = 0;
    std::uint32_t index = 0;
    std::uint32_t count = 0;
    std::uint64_t generation = 0;
  };

  void validate_config() const;
  void require_mounted() const;
  void check_range(Lpn first, std::uint64_t count) const;
  void reset_volatile();

  KeyCheck check_key(Lpn lpn, AccessKey key) const;
  void register_key(Lpn lpn, AccessKey key);
  void clear_key(Lpn lpn);
  Verdict finish_command(Verdict verdict, Access access, Lpn first, std::uint64_t count,
                         AccessKey key, const char* op);

  void write_pages(Lpn first, std::span<const std::uint8_t> data);
  Ppn allocate_page();
  void invalidate(Ppn ppn);
  void mark_dirty(std::uint64_t dlpn);
  std::uint64_t gc_once();
  void collect_garbage();

  // Metadata log.
  Bytes build_map_page(std::uint64_t table_page) const;
  std::vector<Bytes> build_index_pages(std::uint64_t generation) const;
  Bytes build_lockout_page() const;
  std::vector<Bytes> build_full_image();
  void seal_meta_page(Bytes& page, const MetaPageHeader& header) const;
  std::optional<MetaPageHeader> parse_meta_page(std::span<const std::uint8_t> page, Ppn ppn) const;
  /// Appends pages to the active half, compacting into the other half when
  /// they do not fit. Returns true if compaction happened.
  bool append_meta(std::vector<Bytes> pages, std::uint64_t* overhead_bytes);
  void compact_meta(std::uint64_t* overhead_bytes);
  std::uint64_t persist(bool all_pages, std::uint64_t* overhead_bytes);
  void apply_pending_invalidations();
  std::uint64_t max_index_pages() const;

  void log(LogEvent event, Lpn lpn, AccessKey key, std::string detail);

  FlashDevice& flash_;
  FtlConfig config_;
  FlashGeometry geometry_;
  EventLog* log_;

  std::uint64_t subpages_ = 0;
  std::uint64_t data_blocks_ = 0;
  std::uint64_t exported_entries_ = 0;
  std::uint64_t entry_bytes_ = 0;
  std::uint64_t entries_per_page_ = 0;
  std::uint64_t table_pages_ = 0;
  std::uint64_t meta_half_pages_ = 0;

  bool mounted_ = false;

  // Mapping table, indexed by device LPN.
  std::vector<Ppn> map_;
  /// Key words, `subpages_` per entry; the sentinel word marks a NULL slot.
  std::vector<std::uint32_t> keys_;
  std::vector<bool> dirty_;
  KeyLockIndex index_;
  bool index_dirty_ = false;
  std::uint64_t index_generation_ = 0;

  // Block bookkeeping.
  std::vector<std::uint64_t> owner_;  // ppn -> dlpn, kUnmapped if none
  std::vector<std::uint64_t> valid_count_;
  std::vector<bool> block_free_;
  std::deque<BlockId> free_;
  std::optional<BlockId> active_;
  std::uint64_t write_ptr_ = 0;
  bool in_gc_ = false;
  std::optional<BlockId> last_victim_;
  std::vector<Ppn> pending_invalid_;

  // Metadata log cursor.
  std::uint64_t meta_half_ = 0;
  std::uint64_t meta_offset_ = 0;
  std::uint64_t meta_seq_ = 1;

  std::uint64_t invalid_attempts_ = 0;
  bool locked_out_ = false;

  FtlCounters counters_;
};

}  // namespace keyssd
