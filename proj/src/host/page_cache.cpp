#include "keyssd/page_cache.hpp"

#include "keyssd/error.hpp"

namespace keyssd {

PageCache::PageCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) {
    throw Error(ErrorCode::InvalidConfig, "page cache capacity must be nonzero");
  }
}

std::optional<Bytes> PageCache::get(InodeId inode, std::uint64_t page) {
  auto it = index_.find({inode, page});
  if (it == index_.end()) {
    ++misses_;
    return std::nullopt;
  }
  ++hits_;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->data;
}

bool PageCache::contains(InodeId inode, std::uint64_t page) const {
  return index_.contains({inode, page});
}

void PageCache::put(InodeId inode, std::uint64_t page, Bytes data) {
  const Key key{inode, page};
  if (auto it = index_.find(key); it != index_.end()) {
    it->second->data = std::move(data);
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.push_front({key, std::move(data)});
  index_[key] = lru_.begin();
  if (lru_.size() > capacity_) {
    index_.erase(lru_.back().key);
    lru_.pop_back();
  }
}

void PageCache::drop_inode(InodeId inode) {
  for (auto it = lru_.begin(); it != lru_.end();) {
    if (it->key.inode == inode) {
      index_.erase(it->key);
      it = lru_.erase(it);
    } else {
      ++it;
    }
  }
}

void PageCache::clear() {
  lru_.clear();
  index_.clear();
}

}  // namespace keyssd
