#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "keyssd/host_stack.hpp"

namespace keyssd {

enum class Pattern { SeqRead, SeqWrite, RandRead, RandWrite };
enum class FileProfile { SmallFiles, BigFiles, RawDevice };

std::string_view to_string(Pattern p);
std::string_view to_string(FileProfile p);

inline constexpr std::uint64_t kSmallFileBytes = 4096;
inline constexpr std::uint64_t kDefaultBigFileBytes = 8ULL << 20;

struct WorkloadSpec {
  Pattern pattern = Pattern::SeqWrite;
  std::size_t queue_depth = 1;
  FileProfile profile = FileProfile::SmallFiles;
  std::uint64_t file_count = 16;
  /// Per-file size; 0 picks the profile default (4 KiB small, 8 MiB big).
  std::uint64_t file_bytes = 0;
  /// RawDevice region in LBAs.
  Lba region_lba = 0;
  std::uint64_t region_bytes = 1ULL << 20;
  std::uint32_t client_count = 1;
  std::uint64_t seed = 1;
  /// Random patterns: number of page operations. Sequential patterns cover
  /// the data set once and ignore this.
  std::uint64_t ops = 1024;
  /// A FLUSH is issued after every `flush_interval` write operations; 0 never.
  std::uint64_t flush_interval = 0;
  /// Percentage of files opened with their owner's key.
  unsigned locked_percent = 100;

  std::uint64_t effective_file_bytes() const;
  std::uint64_t pages_per_file() const;
};

enum class OpKind { Open, Close, Read, Write, RawRead, RawWrite, Flush };
std::string_view to_string(OpKind k);

struct WorkloadOp {
  OpKind kind = OpKind::Read;
  ClientId client = 0;
  std::uint64_t file = 0;    // file index for file ops
  std::uint64_t offset = 0;  // byte offset for file ops
  std::uint64_t length = 0;  // bytes
  Lba lba = 0;               // raw ops
  AccessKey key;             // Open only

  friend bool operator==(const WorkloadOp&, const WorkloadOp&) = default;
};

/// Key owned by a client context. Never the sentinel.
AccessKey client_key(ClientId client);
/// Owner key for file `index` under `spec`, or NO_KEY for the unlocked share.
AccessKey file_key(const WorkloadSpec& spec, std::uint64_t index);
std::string file_path(std::uint64_t index);
ClientId file_owner(const WorkloadSpec& spec, std::uint64_t index);

/// Deterministic op stream. Each client owns the files with
/// `index % client_count == client`; a seeded scheduler interleaves the
/// per-client streams.
std::vector<WorkloadOp> generate(const WorkloadSpec& spec);

/// Deterministic page payload for (file, page, generation).
Bytes pattern_page(std::uint64_t seed, std::uint64_t file, std::uint64_t page,
                   std::uint64_t bytes);

struct WorkloadStats {
  std::uint64_t ops = 0;
  std::uint64_t data_ops = 0;
  std::uint64_t flushes = 0;
  std::uint64_t denied_ops = 0;
  std::uint64_t raw_completions = 0;
};

/// Creates the files (or raw region contents) read patterns need, each
/// written by its owner. Files written here are closed afterwards.
void prepare(HostStack& host, const WorkloadSpec& spec);

/// Executes `ops`. Raw operations are batched up to the queue depth.
WorkloadStats run(HostStack& host, const WorkloadSpec& spec, const std::vector<WorkloadOp>& ops);

}  // namespace keyssd
