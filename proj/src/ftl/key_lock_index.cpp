#include "keyssd/key_lock_index.hpp"

#include <algorithm>

#include "keyssd/error.hpp"

namespace keyssd {

void KeyLockIndex::insert(Lpn lpn, AccessKey key) {
  if (key.is_none()) {
    throw Error(ErrorCode::InvalidConfig, "cannot lock with the no-key sentinel");
  }
  if (auto it = locked_.find(lpn); it != locked_.end()) {
    if (it->second == key) {
      return;
    }
    throw Error(ErrorCode::InsertConflict, "lpn " + std::to_string(lpn) + " already locked");
  }
  trees_[key].insert(lpn);
  locked_.emplace(lpn, key);
  ++counters_.insertions;
}

LockSearch KeyLockIndex::search(Lpn lpn, AccessKey key) const {
  ++counters_.searches;
  if (auto tree = trees_.find(key); tree != trees_.end() && tree->second.contains(lpn)) {
    return LockSearch::Match;
  }
  return locked_.contains(lpn) ? LockSearch::WrongKey : LockSearch::NotLocked;
}

bool KeyLockIndex::remove(Lpn lpn) {
  auto it = locked_.find(lpn);
  if (it == locked_.end()) {
    return false;
  }
  auto tree = trees_.find(it->second);
  tree->second.erase(lpn);
  if (tree->second.empty()) {
    trees_.erase(tree);
  }
  locked_.erase(it);
  ++counters_.removals;
  return true;
}

std::vector<std::pair<AccessKey, std::vector<Lpn>>> KeyLockIndex::records() const {
  std::vector<std::pair<AccessKey, std::vector<Lpn>>> out;
  out.reserve(trees_.size());
  for (const auto& [key, tree] : trees_) {
    out.emplace_back(key, std::vector<Lpn>(tree.begin(), tree.end()));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void KeyLockIndex::clear() {
  trees_.clear();
  locked_.clear();
}

bool KeyLockIndex::consistent() const {
  std::size_t total = 0;
  for (const auto& [key, tree] : trees_) {
    if (tree.empty()) {
      return false;
    }
    for (Lpn lpn : tree) {
      auto it = locked_.find(lpn);
      if (it == locked_.end() || it->second != key) {
        return false;
      }
    }
    total += tree.size();
  }
  return total == locked_.size();
}

}  // namespace keyssd
