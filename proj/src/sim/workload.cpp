#include "keyssd/workload.hpp"

#include <deque>
#include <map>
#include <random>

#include <fmt/format.h>

#include "keyssd/error.hpp"

namespace keyssd {

std::string_view to_string(Pattern p) {
  switch (p) {
    case Pattern::SeqRead: return "SeqRead";
    case Pattern::SeqWrite: return "SeqWrite";
    case Pattern::RandRead: return "RandRead";
    case Pattern::RandWrite: return "RandWrite";
  }
  return "?";
}

std::string_view to_string(FileProfile p) {
  switch (p) {
    case FileProfile::SmallFiles: return "SmallFiles";
    case FileProfile::BigFiles: return "BigFiles";
    case FileProfile::RawDevice: return "RawDevice";
  }
  return "?";
}

std::string_view to_string(OpKind k) {
  switch (k) {
    case OpKind::Open: return "open";
    case OpKind::Close: return "close";
    case OpKind::Read: return "read";
    case OpKind::Write: return "write";
    case OpKind::RawRead: return "raw_read";
    case OpKind::RawWrite: return "raw_write";
    case OpKind::Flush: return "flush";
  }
  return "?";
}

std::uint64_t WorkloadSpec::effective_file_bytes() const {
  if (file_bytes != 0) {
    return file_bytes;
  }
  return profile == FileProfile::BigFiles ? kDefaultBigFileBytes : kSmallFileBytes;
}

std::uint64_t WorkloadSpec::pages_per_file() const {
  return (effective_file_bytes() + kSmallFileBytes - 1) / kSmallFileBytes;
}

AccessKey client_key(ClientId client) { return AccessKey(0x00A00033u + client * 0x101u); }

ClientId file_owner(const WorkloadSpec& spec, std::uint64_t index) {
  return static_cast<ClientId>(index % spec.client_count);
}

AccessKey file_key(const WorkloadSpec& spec, std::uint64_t index) {
  const std::uint64_t locked = spec.file_count * spec.locked_percent / 100;
  return index < locked ? client_key(file_owner(spec, index)) : kNoKey;
}

std::string file_path(std::uint64_t index) { return fmt::format("/f{:06}", index); }

Bytes pattern_page(std::uint64_t seed, std::uint64_t file, std::uint64_t page,
                   std::uint64_t bytes) {
  std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL ^ (file << 32) ^ page);
  Bytes out(bytes);
  for (std::size_t i = 0; i < bytes; i += 8) {
    const std::uint64_t word = rng();
    for (std::size_t b = 0; b < 8 && i + b < bytes; ++b) {
      out[i + b] = static_cast<std::uint8_t>(word >> (8 * b));
    }
  }
  return out;
}

namespace {

void validate(const WorkloadSpec& spec) {
  if (spec.queue_depth == 0 || spec.queue_depth > 128) {
    throw Error(ErrorCode::ConfigError, "queue_depth must be in 1..128");
  }
  if (spec.client_count == 0) {
    throw Error(ErrorCode::ConfigError, "client_count must be positive");
  }
  if (spec.locked_percent > 100) {
    throw Error(ErrorCode::ConfigError, "locked_percent must be in 0..100");
  }
  if (spec.profile == FileProfile::RawDevice) {
    if (spec.region_lba % 8 != 0 || spec.region_bytes == 0 ||
        spec.region_bytes % kSmallFileBytes != 0) {
      throw Error(ErrorCode::ConfigError, "raw region must be whole 4 KiB pages");
    }
  } else if (spec.file_count == 0) {
    throw Error(ErrorCode::ConfigError, "file_count must be positive");
  }
}

bool is_read(Pattern p) { return p == Pattern::SeqRead || p == Pattern::RandRead; }
bool is_random(Pattern p) { return p == Pattern::RandRead || p == Pattern::RandWrite; }

// A unit is a run of ops from one client that the scheduler keeps together.
using Unit = std::vector<WorkloadOp>;

std::vector<std::deque<Unit>> raw_units(const WorkloadSpec& spec, std::mt19937_64& rng) {
  const std::uint64_t pages = spec.region_bytes / kSmallFileBytes;
  const OpKind kind = is_read(spec.pattern) ? OpKind::RawRead : OpKind::RawWrite;
  std::vector<std::deque<Unit>> per_client(spec.client_count);
  if (is_random(spec.pattern)) {
    std::uniform_int_distribution<std::uint64_t> pick(0, pages - 1);
    for (std::uint64_t i = 0; i < spec.ops; ++i) {
      const auto c = static_cast<ClientId>(i % spec.client_count);
      WorkloadOp op{kind, c, 0, 0, kSmallFileBytes, spec.region_lba + pick(rng) * 8, kNoKey};
      per_client[c].push_back({op});
    }
  } else {
    // Each client sweeps its own contiguous slice of the region.
    const std::uint64_t slice = (pages + spec.client_count - 1) / spec.client_count;
    for (std::uint64_t p = 0; p < pages; ++p) {
      const auto c = static_cast<ClientId>(p / slice);
      WorkloadOp op{kind, c, 0, 0, kSmallFileBytes, spec.region_lba + p * 8, kNoKey};
      per_client[c].push_back({op});
    }
  }
  return per_client;
}

std::vector<std::deque<Unit>> file_units(const WorkloadSpec& spec, std::mt19937_64& rng) {
  const std::uint64_t file_bytes = spec.effective_file_bytes();
  const std::uint64_t chunk = kSmallFileBytes * spec.queue_depth;
  const OpKind data = is_read(spec.pattern) ? OpKind::Read : OpKind::Write;
  std::vector<std::deque<Unit>> per_client(spec.client_count);

  if (!is_random(spec.pattern)) {
    for (std::uint64_t f = 0; f < spec.file_count; ++f) {
      const ClientId c = file_owner(spec, f);
      Unit unit;
      unit.push_back({OpKind::Open, c, f, 0, 0, 0, file_key(spec, f)});
      for (std::uint64_t off = 0; off < file_bytes; off += chunk) {
        unit.push_back({data, c, f, off, std::min(chunk, file_bytes - off), 0, kNoKey});
      }
      unit.push_back({OpKind::Close, c, f, 0, 0, 0, kNoKey});
      per_client[c].push_back(std::move(unit));
    }
    return per_client;
  }

  // Random: each client opens its files, issues page ops, then closes.
  std::vector<std::vector<std::uint64_t>> owned(spec.client_count);
  for (std::uint64_t f = 0; f < spec.file_count; ++f) {
    owned[file_owner(spec, f)].push_back(f);
  }
  const std::uint64_t pages = spec.pages_per_file();
  std::uniform_int_distribution<std::uint64_t> pick_page(0, pages - 1);
  for (ClientId c = 0; c < spec.client_count; ++c) {
    for (std::uint64_t f : owned[c]) {
      per_client[c].push_back({{OpKind::Open, c, f, 0, 0, 0, file_key(spec, f)}});
    }
  }
  for (std::uint64_t i = 0; i < spec.ops; ++i) {
    const auto c = static_cast<ClientId>(i % spec.client_count);
    if (owned[c].empty()) {
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick_file(0, owned[c].size() - 1);
    const std::uint64_t f = owned[c][pick_file(rng)];
    const std::uint64_t off = pick_page(rng) * kSmallFileBytes;
    per_client[c].push_back(
        {{data, c, f, off, std::min(kSmallFileBytes, file_bytes - off), 0, kNoKey}});
  }
  for (ClientId c = 0; c < spec.client_count; ++c) {
    for (std::uint64_t f : owned[c]) {
      per_client[c].push_back({{OpKind::Close, c, f, 0, 0, 0, kNoKey}});
    }
  }
  return per_client;
}

}  // namespace

std::vector<WorkloadOp> generate(const WorkloadSpec& spec) {
  validate(spec);
  std::mt19937_64 rng(spec.seed);
  auto per_client =
      spec.profile == FileProfile::RawDevice ? raw_units(spec, rng) : file_units(spec, rng);

  // Seeded scheduler: pick a client with work left, emit its next unit.
  std::vector<WorkloadOp> out;
  std::uint64_t since_flush = 0;
  std::vector<ClientId> live;
  for (ClientId c = 0; c < spec.client_count; ++c) {
    if (!per_client[c].empty()) {
      live.push_back(c);
    }
  }
  while (!live.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, live.size() - 1);
    const std::size_t slot = pick(rng);
    auto& queue = per_client[live[slot]];
    for (WorkloadOp& op : queue.front()) {
      // Hosts flush after writes; read-only streams never flush.
      const bool write_op = op.kind == OpKind::Write || op.kind == OpKind::RawWrite;
      out.push_back(std::move(op));
      if (write_op && spec.flush_interval != 0 && ++since_flush == spec.flush_interval) {
        out.push_back({OpKind::Flush, 0, 0, 0, 0, 0, kNoKey});
        since_flush = 0;
      }
    }
    queue.pop_front();
    if (queue.empty()) {
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(slot));
    }
  }
  return out;
}

void prepare(HostStack& host, const WorkloadSpec& spec) {
  validate(spec);
  const bool needs_data = is_read(spec.pattern) || is_random(spec.pattern);
  if (!needs_data) {
    return;
  }
  if (spec.profile == FileProfile::RawDevice) {
    const std::uint64_t pages = spec.region_bytes / kSmallFileBytes;
    std::vector<Lba> lbas;
    std::vector<Bytes> data;
    for (std::uint64_t p = 0; p < pages; ++p) {
      lbas.push_back(spec.region_lba + p * 8);
      data.push_back(pattern_page(spec.seed, 0, p, kSmallFileBytes));
    }
    host.raw_pages(RawOp::Write, lbas, std::move(data));
    return;
  }
  const std::uint64_t file_bytes = spec.effective_file_bytes();
  const std::uint64_t pages = spec.pages_per_file();
  for (std::uint64_t f = 0; f < spec.file_count; ++f) {
    const FileHandle h =
        host.open_key(file_path(f), file_key(spec, f), file_owner(spec, f), true);
    Bytes content;
    content.reserve(pages * kSmallFileBytes);
    for (std::uint64_t p = 0; p < pages; ++p) {
      const Bytes page = pattern_page(spec.seed, f, p, kSmallFileBytes);
      content.insert(content.end(), page.begin(), page.end());
    }
    content.resize(file_bytes);
    host.file_write(h, 0, content);
    host.close_key(h);
  }
}

WorkloadStats run(HostStack& host, const WorkloadSpec& spec, const std::vector<WorkloadOp>& ops) {
  WorkloadStats stats;
  std::map<std::pair<ClientId, std::uint64_t>, FileHandle> handles;
  std::vector<Lba> raw_batch;
  std::vector<Bytes> raw_data;
  OpKind raw_kind = OpKind::RawRead;

  auto flush_raw = [&] {
    if (raw_batch.empty()) {
      return;
    }
    const RawOp op = raw_kind == OpKind::RawWrite ? RawOp::Write : RawOp::Read;
    for (const Completion& c : host.raw_pages(op, raw_batch, std::move(raw_data))) {
      ++stats.raw_completions;
      if (c.status != CompletionStatus::Success) {
        ++stats.denied_ops;
      }
    }
    raw_batch.clear();
    raw_data.clear();
  };

  for (const WorkloadOp& op : ops) {
    ++stats.ops;
    if (op.kind == OpKind::RawRead || op.kind == OpKind::RawWrite) {
      if (!raw_batch.empty() && (raw_kind != op.kind || raw_batch.size() == spec.queue_depth)) {
        flush_raw();
      }
      raw_kind = op.kind;
      raw_batch.push_back(op.lba);
      if (op.kind == OpKind::RawWrite) {
        raw_data.push_back(pattern_page(spec.seed ^ stats.ops, 0, op.lba, kSmallFileBytes));
      }
      ++stats.data_ops;
      continue;
    }
    flush_raw();

    const auto slot = std::make_pair(op.client, op.file);
    try {
      switch (op.kind) {
        case OpKind::Open:
          handles[slot] = host.open_key(file_path(op.file), op.key, op.client, true);
          break;
        case OpKind::Close:
          if (auto it = handles.find(slot); it != handles.end()) {
            host.close_key(it->second);
            handles.erase(it);
          }
          break;
        case OpKind::Read:
        case OpKind::Write: {
          ++stats.data_ops;
          auto it = handles.find(slot);
          if (it == handles.end()) {
            ++stats.denied_ops;
            break;
          }
          if (op.kind == OpKind::Read) {
            host.file_read(it->second, op.offset, op.length);
          } else {
            Bytes data;
            data.reserve(op.length);
            for (std::uint64_t off = 0; off < op.length; off += kSmallFileBytes) {
              const Bytes page = pattern_page(spec.seed + 1, op.file,
                                              (op.offset + off) / kSmallFileBytes,
                                              kSmallFileBytes);
              data.insert(data.end(), page.begin(), page.end());
            }
            data.resize(op.length);
            host.file_write(it->second, op.offset, data);
          }
          break;
        }
        case OpKind::Flush:
          host.flush();
          ++stats.flushes;
          break;
        case OpKind::RawRead:
        case OpKind::RawWrite:
          break;
      }
    } catch (const Error& e) {
      switch (e.code()) {
        case ErrorCode::AccessDenied:
        case ErrorCode::OpenDeniedByDevice:
          ++stats.denied_ops;
          break;
        default:
          throw;
      }
    }
  }
  flush_raw();
  return stats;
}

}  // namespace keyssd
