#include "keyssd/key_tables.hpp"

namespace keyssd {

void KeyInodeTable::insert(InodeId inode, ClientId client, AccessKey key) {
  std::lock_guard lock(mutex_);
  entries_[{inode, client}] = key;
}

std::optional<AccessKey> KeyInodeTable::lookup(InodeId inode, ClientId client) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find({inode, client}); it != entries_.end()) {
    return it->second;
  }
  return std::nullopt;
}

bool KeyInodeTable::remove(InodeId inode, ClientId client) {
  std::lock_guard lock(mutex_);
  return entries_.erase({inode, client}) > 0;
}

std::size_t KeyInodeTable::remove_inode(InodeId inode) {
  std::lock_guard lock(mutex_);
  return std::erase_if(entries_, [inode](const auto& e) { return e.first.inode == inode; });
}

std::size_t KeyInodeTable::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

void KeyLbaTable::insert(Lba lba, AccessKey key) {
  std::lock_guard lock(mutex_);
  entries_[lba] = key;
}

std::optional<AccessKey> KeyLbaTable::lookup(Lba lba) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(lba); it != entries_.end()) {
    return it->second;
  }
  return std::nullopt;
}

bool KeyLbaTable::remove(Lba lba) {
  std::lock_guard lock(mutex_);
  return entries_.erase(lba) > 0;
}

std::size_t KeyLbaTable::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

}  // namespace keyssd
