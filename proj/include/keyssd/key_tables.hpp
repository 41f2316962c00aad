#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <unordered_map>

#include "keyssd/page_cache.hpp"
#include "keyssd/types.hpp"

namespace keyssd {

/// A process context issuing file operations.
using ClientId = std::uint32_t;

/// Open-file keys, one per (inode, client) pair. An entry exists while the
/// client holds the file open with a key.
class KeyInodeTable {
 public:
  void insert(InodeId inode, ClientId client, AccessKey key);
  std::optional<AccessKey> lookup(InodeId inode, ClientId client) const;
  bool remove(InodeId inode, ClientId client);
  std::size_t remove_inode(InodeId inode);
  std::size_t size() const;
  bool empty() const { return size() == 0; }

 private:
  struct Slot {
    InodeId inode;
    ClientId client;
    friend bool operator==(const Slot&, const Slot&) = default;
  };
  struct SlotHash {
    std::size_t operator()(const Slot& s) const noexcept {
      return std::hash<std::uint64_t>{}(s.inode * 31 + s.client);
    }
  };

  mutable std::mutex mutex_;
  std::unordered_map<Slot, AccessKey, SlotHash> entries_;
};

/// In-flight request keys by block address; emptied as completions arrive.
class KeyLbaTable {
 public:
  void insert(Lba lba, AccessKey key);
  std::optional<AccessKey> lookup(Lba lba) const;
  bool remove(Lba lba);
  std::size_t size() const;
  bool empty() const { return size() == 0; }

 private:
  mutable std::mutex mutex_;
  std::unordered_map<Lba, AccessKey> entries_;
};

}  // namespace keyssd
