#include "keyssd/file_layer.hpp"

#include <algorithm>

#include "keyssd/error.hpp"

namespace keyssd {

std::uint64_t Inode::allocated_pages() const {
  std::uint64_t n = 0;
  for (const Extent& e : extents) {
    n += e.pages;
  }
  return n;
}

FileLayer::FileLayer(std::uint64_t first_page, std::uint64_t end_page,
                     std::uint64_t sectors_per_page)
    : sectors_per_page_(sectors_per_page) {
  if (end_page <= first_page || sectors_per_page == 0) {
    throw Error(ErrorCode::InvalidConfig, "empty file-layer address range");
  }
  free_[first_page] = end_page - first_page;
}

InodeId FileLayer::create(const std::string& path, std::optional<Lba> pinned_lba) {
  if (names_.contains(path)) {
    throw Error(ErrorCode::AlreadyExists, path);
  }
  if (pinned_lba && *pinned_lba % sectors_per_page_ != 0) {
    throw Error(ErrorCode::FieldOverflow, "pinned lba " + hex(*pinned_lba) + " is not page aligned");
  }
  const InodeId id = next_id_++;
  Inode inode;
  inode.id = id;
  inode.path = path;
  inodes_.emplace(id, std::move(inode));
  names_.emplace(path, id);
  if (pinned_lba) {
    pinned_[id] = *pinned_lba / sectors_per_page_;
  }
  return id;
}

std::optional<InodeId> FileLayer::lookup(const std::string& path) const {
  if (auto it = names_.find(path); it != names_.end()) {
    return it->second;
  }
  return std::nullopt;
}

const Inode& FileLayer::inode(InodeId id) const {
  auto it = inodes_.find(id);
  if (it == inodes_.end()) {
    throw Error(ErrorCode::NotFound, "inode " + std::to_string(id));
  }
  return it->second;
}

Inode& FileLayer::mutable_inode(InodeId id) {
  return const_cast<Inode&>(static_cast<const FileLayer*>(this)->inode(id));
}

void FileLayer::set_size(InodeId id, std::uint64_t size) { mutable_inode(id).size = size; }

std::optional<std::uint64_t> FileLayer::take_at(std::uint64_t page, std::uint64_t want) {
  auto it = free_.upper_bound(page);
  if (it == free_.begin()) {
    return std::nullopt;
  }
  --it;
  const std::uint64_t start = it->first;
  const std::uint64_t len = it->second;
  if (page >= start + len) {
    return std::nullopt;
  }
  const std::uint64_t taken = std::min(want, start + len - page);
  free_.erase(it);
  if (page > start) {
    free_[start] = page - start;
  }
  if (page + taken < start + len) {
    free_[page + taken] = start + len - (page + taken);
  }
  return taken;
}

std::pair<std::uint64_t, std::uint64_t> FileLayer::take_first_fit(std::uint64_t want) {
  if (free_.empty()) {
    throw Error(ErrorCode::NoSpace, "file layer is full");
  }
  // Prefer a run that fits whole; otherwise take the first run available.
  auto it = std::find_if(free_.begin(), free_.end(),
                         [want](const auto& run) { return run.second >= want; });
  if (it == free_.end()) {
    it = free_.begin();
  }
  const std::uint64_t start = it->first;
  return {start, *take_at(start, want)};
}

void FileLayer::give_back(std::uint64_t page, std::uint64_t count) {
  auto [it, inserted] = free_.emplace(page, count);
  if (auto next = std::next(it); next != free_.end() && page + count == next->first) {
    it->second += next->second;
    free_.erase(next);
  }
  if (it != free_.begin()) {
    auto prev = std::prev(it);
    if (prev->first + prev->second == page) {
      prev->second += it->second;
      free_.erase(it);
    }
  }
}

void FileLayer::ensure_allocated(InodeId id, std::uint64_t pages) {
  Inode& inode = mutable_inode(id);
  std::uint64_t have = inode.allocated_pages();
  if (pages <= have) {
    return;
  }
  if (pages - have > free_pages()) {
    throw Error(ErrorCode::NoSpace, "file layer cannot hold " + std::to_string(pages) + " pages");
  }

  auto append = [&](std::uint64_t start, std::uint64_t count) {
    if (!inode.extents.empty()) {
      Extent& last = inode.extents.back();
      if (last.lba / sectors_per_page_ + last.pages == start) {
        last.pages += count;
        owners_[last.lba / sectors_per_page_].second += count;
        have += count;
        return;
      }
    }
    inode.extents.push_back({have, start * sectors_per_page_, count});
    owners_[start] = {id, count};
    have += count;
  };

  if (have == 0) {
    if (auto pin = pinned_.find(id); pin != pinned_.end()) {
      const auto taken = take_at(pin->second, pages);
      if (!taken) {
        throw Error(ErrorCode::NoSpace, "pinned address " + hex(pin->second * sectors_per_page_) +
                                            " is not free");
      }
      append(pin->second, *taken);
      pinned_.erase(pin);
    }
  }
  if (have > 0 && have < pages) {
    const Extent& last = inode.extents.back();
    if (auto taken = take_at(last.lba / sectors_per_page_ + last.pages, pages - have)) {
      append(last.lba / sectors_per_page_ + last.pages, *taken);
    }
  }
  while (have < pages) {
    auto [start, count] = take_first_fit(pages - have);
    append(start, count);
  }
}

Lba FileLayer::lba_of(InodeId id, std::uint64_t file_page) const {
  for (const Extent& e : inode(id).extents) {
    if (file_page >= e.file_page && file_page < e.file_page + e.pages) {
      return e.lba + (file_page - e.file_page) * sectors_per_page_;
    }
  }
  throw Error(ErrorCode::OutOfRange,
              "file page " + std::to_string(file_page) + " of inode " + std::to_string(id));
}

void FileLayer::release(InodeId id) {
  const Inode& node = inode(id);
  for (const Extent& e : node.extents) {
    const std::uint64_t start = e.lba / sectors_per_page_;
    // Extents that merged on growth share one owners_ record.
    if (auto it = owners_.find(start); it != owners_.end() && it->second.first == id) {
      owners_.erase(it);
    }
    give_back(start, e.pages);
  }
  names_.erase(node.path);
  pinned_.erase(id);
  inodes_.erase(id);
}

std::optional<InodeId> FileLayer::owner_of(Lba lba) const {
  const std::uint64_t page = lba / sectors_per_page_;
  auto it = owners_.upper_bound(page);
  if (it == owners_.begin()) {
    return std::nullopt;
  }
  --it;
  if (page < it->first + it->second.second) {
    return it->second.first;
  }
  return std::nullopt;
}

std::vector<Lba> FileLayer::address_space(InodeId id) const {
  std::vector<Lba> out;
  for (const Extent& e : inode(id).extents) {
    for (std::uint64_t i = 0; i < e.pages; ++i) {
      out.push_back(e.lba + i * sectors_per_page_);
    }
  }
  return out;
}

std::uint64_t FileLayer::free_pages() const {
  std::uint64_t n = 0;
  for (const auto& [start, len] : free_) {
    n += len;
  }
  return n;
}

std::vector<std::string> FileLayer::paths() const {
  std::vector<std::string> out;
  for (const auto& [path, id] : names_) {
    out.push_back(path);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace keyssd
