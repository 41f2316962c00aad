#include "keyssd/host_stack.hpp"

#include <algorithm>

#include "keyssd/error.hpp"

namespace keyssd {

namespace {

std::uint64_t fs_end(const HostConfig& config, SataLink& link) {
  return config.fs_end_page == 0 ? link.ftl().capacity() : config.fs_end_page;
}

// Completion statuses other than deny/grant abort the file operation.
void throw_on_device_fault(const Completion& c) {
  if (c.status == CompletionStatus::DeviceLockedOut) {
    throw Error(ErrorCode::DeviceLockedOut, "device refused command at " + hex(c.lba));
  }
  if (c.status == CompletionStatus::DeviceError) {
    throw Error(ErrorCode::DeviceError, c.error);
  }
}

}  // namespace

std::string_view to_string(CloseMode mode) {
  return mode == CloseMode::Close ? "Close" : "NoClose";
}

HostStack::HostStack(SataLink& link, HostConfig config, EventLog* log)
    : link_(link),
      config_(config),
      log_(log),
      files_(config.fs_first_page, fs_end(config, link), link.geometry().sectors_per_host_page()),
      cache_(config.cache_pages) {
  if (config_.queue_depth == 0 || config_.queue_depth > SataLink::kQueueCapacity) {
    throw Error(ErrorCode::InvalidConfig, "queue depth must be in 1..128");
  }
  if (fs_end(config_, link_) > link_.ftl().capacity()) {
    throw Error(ErrorCode::InvalidConfig, "file-layer window exceeds device capacity");
  }
}

InodeId HostStack::create(const std::string& path, std::optional<Lba> pinned_lba) {
  std::lock_guard lock(mutex_);
  return files_.create(path, pinned_lba);
}

const HostStack::OpenFile& HostStack::handle_or_throw(FileHandle handle) const {
  auto it = handles_.find(handle);
  if (it == handles_.end()) {
    throw Error(ErrorCode::BadHandle, "handle " + std::to_string(handle));
  }
  return it->second;
}

AccessKey HostStack::request_key(const OpenFile& file) const {
  return key_inode_.lookup(file.inode, file.client).value_or(kNoKey);
}

void HostStack::log_host(LogEvent event, Lba lba, AccessKey key, std::string detail) {
  if (log_ != nullptr) {
    log_->append({op_index_, LogLayer::Host, event, lba, key, std::move(detail)});
  }
}

std::vector<Completion> HostStack::run_pages(AtaCommand command, std::vector<PageRequest>& pages,
                                             AccessKey key, std::optional<InodeId> inode) {
  std::vector<Completion> out;
  out.reserve(pages.size());
  const std::uint64_t spp = sectors_per_page();
  for (std::size_t i = 0; i < pages.size(); i += config_.queue_depth) {
    const std::size_t end = std::min(pages.size(), i + config_.queue_depth);
    for (std::size_t j = i; j < end; ++j) {
      PageRequest& page = pages[j];
      key_lba_.insert(page.lba, key);
      // The frame is built from what the KeyLba table holds for this block.
      const AccessKey frame_key = key_lba_.lookup(page.lba).value_or(kNoKey);
      const FisFrame frame = encode_register_fis(command, page.lba, spp, frame_key);
      if (config_.trace) {
        trace_.push_back({command, page.lba, frame_key, inode});
      }
      link_.submit(frame, std::move(page.data));
      ++counters_.commands;
    }
    for (Completion& c : link_.device_drain()) {
      key_lba_.remove(c.lba);
      out.push_back(std::move(c));
    }
  }
  return out;
}

bool HostStack::verify_first_page(InodeId inode, AccessKey key) {
  ++counters_.read_verifies;
  std::vector<PageRequest> page{{0, files_.lba_of(inode, 0), {}}};
  auto completions = run_pages(AtaCommand::ReadDmaExt, page, key, inode);
  Completion& c = completions.front();
  throw_on_device_fault(c);
  if (c.status != CompletionStatus::Success) {
    return false;
  }
  cache_.put(inode, 0, std::move(c.payload));
  return true;
}

FileHandle HostStack::open_key(const std::string& path, AccessKey key, ClientId client,
                               bool create) {
  std::lock_guard lock(mutex_);
  ++op_index_;
  auto id = files_.lookup(path);
  if (!id) {
    if (!create) {
      throw Error(ErrorCode::NotFound, path);
    }
    id = files_.create(path);
  }
  if (!key.is_none()) {
    key_inode_.insert(*id, client, key);
  }
  const OpenFile file{*id, client};
  if (config_.read_verify && files_.inode(*id).size > 0) {
    const AccessKey effective = request_key(file);
    if (!verify_first_page(*id, effective)) {
      key_inode_.remove(*id, client);
      ++counters_.open_denials;
      log_host(LogEvent::Deny, files_.lba_of(*id, 0), effective, "open " + path + " read-verify");
      throw Error(ErrorCode::OpenDeniedByDevice, path);
    }
  }
  const FileHandle handle = next_handle_++;
  handles_.emplace(handle, file);
  ++counters_.opens;
  return handle;
}

void HostStack::close_key(FileHandle handle) {
  std::lock_guard lock(mutex_);
  const OpenFile file = handle_or_throw(handle);
  handles_.erase(handle);
  if (config_.close_mode == CloseMode::Close) {
    key_inode_.remove(file.inode, file.client);
  }
  ++counters_.closes;
}

Bytes HostStack::file_read(FileHandle handle, std::uint64_t offset, std::uint64_t len) {
  std::lock_guard lock(mutex_);
  ++op_index_;
  const OpenFile& file = handle_or_throw(handle);
  const Inode& inode = files_.inode(file.inode);
  if (offset + len > inode.size) {
    throw Error(ErrorCode::OutOfRange, "read past end of " + inode.path);
  }
  ++counters_.file_reads;
  Bytes out;
  if (len == 0) {
    return out;
  }
  const std::uint64_t hp = host_page_bytes();
  const std::uint64_t first = offset / hp;
  const std::uint64_t last = (offset + len - 1) / hp;

  std::vector<Bytes> pages(last - first + 1);
  std::vector<PageRequest> misses;
  for (std::uint64_t p = first; p <= last; ++p) {
    const bool bypass = config_.read_verify && p == 0;
    if (!bypass) {
      if (auto hit = cache_.get(file.inode, p)) {
        pages[p - first] = std::move(*hit);
        continue;
      }
    }
    misses.push_back({p, files_.lba_of(file.inode, p), {}});
  }

  const AccessKey key = request_key(file);
  const auto completions = run_pages(AtaCommand::ReadDmaExt, misses, key, file.inode);
  bool denied = false;
  for (std::size_t i = 0; i < completions.size(); ++i) {
    const Completion& c = completions[i];
    throw_on_device_fault(c);
    if (c.status != CompletionStatus::Success) {
      denied = true;
      continue;
    }
    cache_.put(file.inode, misses[i].file_page, c.payload);
    pages[misses[i].file_page - first] = c.payload;
  }
  if (denied) {
    log_host(LogEvent::Deny, misses.front().lba, key, "read " + inode.path);
    throw Error(ErrorCode::AccessDenied, "read of " + inode.path + " denied by device");
  }

  out.reserve(len);
  for (std::uint64_t p = first; p <= last; ++p) {
    const Bytes& page = pages[p - first];
    const std::uint64_t lo = p == first ? offset % hp : 0;
    const std::uint64_t hi = p == last ? (offset + len - 1) % hp + 1 : hp;
    out.insert(out.end(), page.begin() + lo, page.begin() + hi);
  }
  return out;
}

void HostStack::file_write(FileHandle handle, std::uint64_t offset,
                           std::span<const std::uint8_t> bytes) {
  std::lock_guard lock(mutex_);
  ++op_index_;
  const OpenFile file = handle_or_throw(handle);
  if (bytes.empty()) {
    return;
  }
  ++counters_.file_writes;
  const std::uint64_t hp = host_page_bytes();
  const std::uint64_t old_size = files_.inode(file.inode).size;
  const std::uint64_t end = offset + bytes.size();
  const std::uint64_t first = offset / hp;
  const std::uint64_t last = (end - 1) / hp;
  files_.ensure_allocated(file.inode, last + 1);

  // Partial pages that already hold file data are read back first.
  auto edge_page = [&](std::uint64_t p) -> Bytes {
    if (p * hp >= old_size) {
      return Bytes(hp, 0);
    }
    const std::uint64_t avail = std::min(hp, old_size - p * hp);
    Bytes page = file_read(handle, p * hp, avail);
    page.resize(hp, 0);
    return page;
  };

  std::vector<PageRequest> requests;
  for (std::uint64_t p = first; p <= last; ++p) {
    const std::uint64_t lo = std::max(offset, p * hp);
    const std::uint64_t hi = std::min(end, (p + 1) * hp);
    Bytes page = (hi - lo == hp) ? Bytes(hp) : edge_page(p);
    std::copy(bytes.begin() + (lo - offset), bytes.begin() + (hi - offset),
              page.begin() + (lo - p * hp));
    requests.push_back({p, files_.lba_of(file.inode, p), std::move(page)});
  }
  std::vector<std::pair<std::uint64_t, Bytes>> written;
  written.reserve(requests.size());
  for (const PageRequest& r : requests) {
    written.emplace_back(r.file_page, r.data);
  }

  const AccessKey key = request_key(file);
  const auto completions = run_pages(AtaCommand::WriteDmaExt, requests, key, file.inode);
  bool denied = false;
  for (std::size_t i = 0; i < completions.size(); ++i) {
    throw_on_device_fault(completions[i]);
    if (completions[i].status != CompletionStatus::Success) {
      denied = true;
      cache_.drop_inode(file.inode);
      continue;
    }
  }
  if (denied) {
    log_host(LogEvent::Deny, files_.lba_of(file.inode, first), key,
             "write " + files_.inode(file.inode).path);
    throw Error(ErrorCode::AccessDenied, "write denied by device");
  }
  for (auto& [p, data] : written) {
    cache_.put(file.inode, p, std::move(data));
  }
  if (end > old_size) {
    files_.set_size(file.inode, end);
  }
}

void HostStack::file_delete(const std::string& path, AccessKey key) {
  std::lock_guard lock(mutex_);
  ++op_index_;
  const auto id = files_.lookup(path);
  if (!id) {
    throw Error(ErrorCode::NotFound, path);
  }
  const Inode& inode = files_.inode(*id);
  if (inode.size > 0 && !verify_first_page(*id, key)) {
    ++counters_.delete_denials;
    log_host(LogEvent::Deny, files_.lba_of(*id, 0), key, "delete " + path);
    throw Error(ErrorCode::DeleteDenied, path);
  }

  // Release the blocks on the device with the caller's key.
  const std::uint64_t spp = sectors_per_page();
  constexpr std::uint64_t kTrimPages = 1024;
  for (const Extent& e : inode.extents) {
    for (std::uint64_t done = 0; done < e.pages; done += kTrimPages) {
      const std::uint64_t n = std::min(kTrimPages, e.pages - done);
      const Lba lba = e.lba + done * spp;
      key_lba_.insert(lba, key);
      const FisFrame frame = encode_register_fis(AtaCommand::DataSetManagement, lba, n * spp, key);
      if (config_.trace) {
        trace_.push_back({AtaCommand::DataSetManagement, lba, key, *id});
      }
      const Completion c = link_.execute(frame);
      key_lba_.remove(lba);
      ++counters_.commands;
      throw_on_device_fault(c);
      if (c.status != CompletionStatus::Success) {
        ++counters_.delete_denials;
        log_host(LogEvent::Deny, lba, key, "delete " + path);
        throw Error(ErrorCode::DeleteDenied, path);
      }
    }
  }

  cache_.drop_inode(*id);
  key_inode_.remove_inode(*id);
  std::erase_if(handles_, [&](const auto& h) { return h.second.inode == *id; });
  files_.release(*id);
  ++counters_.deletes;
}

RequestClass HostStack::classify_request(Lba lba) const {
  std::lock_guard lock(mutex_);
  if (auto owner = files_.owner_of(lba)) {
    return {RequestKind::NormalFileIO, owner};
  }
  return {RequestKind::DirectIO, std::nullopt};
}

std::vector<Completion> HostStack::raw_io(Lba lba, std::uint64_t sector_count, RawOp op,
                                          Bytes data) {
  std::lock_guard lock(mutex_);
  ++op_index_;
  const std::uint64_t spp = sectors_per_page();
  const std::uint64_t hp = host_page_bytes();
  if (lba % spp != 0 || sector_count % spp != 0 || sector_count == 0) {
    throw Error(ErrorCode::FieldOverflow, "raw request must be host-page aligned");
  }
  const std::uint64_t n = sector_count / spp;
  if (op == RawOp::Write && data.empty()) {
    data.assign(n * hp, 0);
  }
  if (op == RawOp::Write && data.size() != n * hp) {
    throw Error(ErrorCode::BadPayloadSize, "raw write payload does not match sector count");
  }
  std::vector<PageRequest> pages;
  pages.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    PageRequest r{i, lba + i * spp, {}};
    if (op == RawOp::Write) {
      r.data.assign(data.begin() + i * hp, data.begin() + (i + 1) * hp);
    }
    pages.push_back(std::move(r));
  }
  // Direct I/O never carries a key.
  return run_pages(op == RawOp::Write ? AtaCommand::WriteDmaExt : AtaCommand::ReadDmaExt, pages,
                   kNoKey, std::nullopt);
}

std::vector<Completion> HostStack::raw_pages(RawOp op, const std::vector<Lba>& lbas,
                                             std::vector<Bytes> data) {
  std::lock_guard lock(mutex_);
  ++op_index_;
  const std::uint64_t hp = host_page_bytes();
  if (op == RawOp::Write && !data.empty() && data.size() != lbas.size()) {
    throw Error(ErrorCode::BadPayloadSize, "one payload per raw page expected");
  }
  std::vector<PageRequest> pages;
  pages.reserve(lbas.size());
  for (std::size_t i = 0; i < lbas.size(); ++i) {
    PageRequest r{i, lbas[i], {}};
    if (op == RawOp::Write) {
      r.data = data.empty() ? Bytes(hp, 0) : std::move(data[i]);
    }
    pages.push_back(std::move(r));
  }
  return run_pages(op == RawOp::Write ? AtaCommand::WriteDmaExt : AtaCommand::ReadDmaExt, pages,
                   kNoKey, std::nullopt);
}

Completion HostStack::flush() {
  std::lock_guard lock(mutex_);
  ++counters_.commands;
  return link_.execute(encode_register_fis(AtaCommand::FlushCacheExt, 0, 0, kNoKey));
}

std::uint64_t HostStack::file_size(const std::string& path) const {
  std::lock_guard lock(mutex_);
  const auto id = files_.lookup(path);
  if (!id) {
    throw Error(ErrorCode::NotFound, path);
  }
  return files_.inode(*id).size;
}

InodeId HostStack::handle_inode(FileHandle handle) const {
  std::lock_guard lock(mutex_);
  return handle_or_throw(handle).inode;
}

std::size_t HostStack::open_handles() const {
  std::lock_guard lock(mutex_);
  return handles_.size();
}

}  // namespace keyssd
