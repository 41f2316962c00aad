#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "keyssd/event_log.hpp"
#include "keyssd/file_layer.hpp"
#include "keyssd/key_tables.hpp"
#include "keyssd/page_cache.hpp"
#include "keyssd/sata_link.hpp"

namespace keyssd {

enum class CloseMode { Close, NoClose };
std::string_view to_string(CloseMode mode);

struct HostConfig {
  bool read_verify = true;
  CloseMode close_mode = CloseMode::Close;
  std::size_t cache_pages = 1024;
  /// Commands kept outstanding per batch before the host waits for completions.
  std::size_t queue_depth = 1;
  /// Host-page window handed to the file layer. `fs_end_page` 0 means the
  /// exported capacity.
  std::uint64_t fs_first_page = 0;
  std::uint64_t fs_end_page = 0;
  /// Record every submitted command in `trace()`.
  bool trace = false;
};

using FileHandle = std::uint64_t;

enum class RequestKind { NormalFileIO, DirectIO };

struct RequestClass {
  RequestKind kind = RequestKind::DirectIO;
  std::optional<InodeId> inode;
};

enum class RawOp { Read, Write };

struct TraceEntry {
  AtaCommand command = AtaCommand::ReadDmaExt;
  Lba lba = 0;
  AccessKey key;
  /// Inode the host believed it was serving, empty for raw requests.
  std::optional<InodeId> inode;
};

struct HostCounters {
  std::uint64_t opens = 0;
  std::uint64_t open_denials = 0;
  std::uint64_t closes = 0;
  std::uint64_t file_reads = 0;
  std::uint64_t file_writes = 0;
  std::uint64_t deletes = 0;
  std::uint64_t delete_denials = 0;
  std::uint64_t commands = 0;
  std::uint64_t read_verifies = 0;
};

/// In-memory model of the kernel side: files, per-open keys, per-request
/// keys, page cache, and the block layer that turns page requests into
/// Register FIS frames.
class HostStack {
 public:
  HostStack(SataLink& link, HostConfig config, EventLog* log = nullptr);

  const HostConfig& config() const { return config_; }

  /// Creates an empty file. With `pinned_lba` its first page lands there.
  InodeId create(const std::string& path, std::optional<Lba> pinned_lba = std::nullopt);

  /// `key` none opens without registering a key. Throws NotFound or
  /// OpenDeniedByDevice.
  FileHandle open_key(const std::string& path, AccessKey key, ClientId client = 0,
                      bool create = false);
  void close_key(FileHandle handle);

  Bytes file_read(FileHandle handle, std::uint64_t offset, std::uint64_t len);
  void file_write(FileHandle handle, std::uint64_t offset, std::span<const std::uint8_t> bytes);
  /// Throws NotFound or DeleteDenied.
  void file_delete(const std::string& path, AccessKey key);

  RequestClass classify_request(Lba lba) const;

  /// One NO_KEY command per host page, bypassing files and cache. A write
  /// with empty `data` writes zeros.
  std::vector<Completion> raw_io(Lba lba, std::uint64_t sector_count, RawOp op, Bytes data = {});
  /// Single-page raw commands at arbitrary aligned addresses, kept
  /// outstanding up to the queue depth. `data` is empty or one page per LBA.
  std::vector<Completion> raw_pages(RawOp op, const std::vector<Lba>& lbas,
                                    std::vector<Bytes> data = {});

  Completion flush();

  std::uint64_t file_size(const std::string& path) const;
  InodeId handle_inode(FileHandle handle) const;
  std::size_t open_handles() const;

  KeyInodeTable& key_inode_table() { return key_inode_; }
  KeyLbaTable& key_lba_table() { return key_lba_; }
  const PageCache& page_cache() const { return cache_; }
  const FileLayer& files() const { return files_; }
  SataLink& link() { return link_; }
  const HostCounters& counters() const { return counters_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  struct OpenFile {
    InodeId inode = 0;
    ClientId client = 0;
  };
  struct PageRequest {
    std::uint64_t file_page = 0;
    Lba lba = 0;
    Bytes data;  // writes only
  };

  const OpenFile& handle_or_throw(FileHandle handle) const;
  AccessKey request_key(const OpenFile& file) const;
  std::uint64_t host_page_bytes() const { return link_.geometry().host_page_bytes; }
  std::uint64_t sectors_per_page() const { return link_.geometry().sectors_per_host_page(); }

  /// Sends one command per page in batches of `queue_depth`, keeping each
  /// key in the KeyLba table until its completion arrives.
  std::vector<Completion> run_pages(AtaCommand command, std::vector<PageRequest>& pages,
                                    AccessKey key, std::optional<InodeId> inode);
  bool verify_first_page(InodeId inode, AccessKey key);
  void log_host(LogEvent event, Lba lba, AccessKey key, std::string detail);

  SataLink& link_;
  HostConfig config_;
  EventLog* log_;
  FileLayer files_;
  PageCache cache_;
  KeyInodeTable key_inode_;
  KeyLbaTable key_lba_;

  mutable std::recursive_mutex mutex_;
  std::unordered_map<FileHandle, OpenFile> handles_;
  FileHandle next_handle_ = 1;
  HostCounters counters_;
  std::vector<TraceEntry> trace_;
  std::uint64_t op_index_ = 0;
};

}  // namespace keyssd
