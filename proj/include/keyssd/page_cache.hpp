#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <unordered_map>

#include "keyssd/types.hpp"

namespace keyssd {

using InodeId = std::uint64_t;

/// LRU cache of 4 KiB file pages keyed by (inode, file page index).
class PageCache {
 public:
  explicit PageCache(std::size_t capacity);

  /// Returns the page and promotes it to most recently used.
  std::optional<Bytes> get(InodeId inode, std::uint64_t page);
  bool contains(InodeId inode, std::uint64_t page) const;
  void put(InodeId inode, std::uint64_t page, Bytes data);
  void drop_inode(InodeId inode);
  void clear();

  std::size_t size() const { return lru_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t hits() const { return hits_; }
  std::uint64_t misses() const { return misses_; }

 private:
  struct Key {
    InodeId inode;
    std::uint64_t page;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      return std::hash<std::uint64_t>{}(k.inode * 0x9E3779B97F4A7C15ULL ^ k.page);
    }
  };
  struct Entry {
    Key key;
    Bytes data;
  };

  std::size_t capacity_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<Key, std::list<Entry>::iterator, KeyHash> index_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

}  // namespace keyssd
