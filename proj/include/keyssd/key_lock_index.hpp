#pragma once

#include <cstdint>
#include <set>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "keyssd/types.hpp"

namespace keyssd {

enum class LockSearch { Match, NotLocked, WrongKey };

/// Dynamic key store: one ordered tree of locked LPNs per key, plus a global
/// membership set so a lock held by another key is detected without walking
/// every tree.
///
/// Invariants: an LPN is in at most one tree, and it is in `locked_` iff it
/// is in some tree.
class KeyLockIndex {
 public:
  struct Counters {
    std::uint64_t insertions = 0;
    std::uint64_t searches = 0;
    std::uint64_t removals = 0;
  };

  /// Idempotent for an (lpn, key) pair already present. Throws
  /// InsertConflict when `lpn` is locked under another key and
  /// InvalidConfig for the sentinel key.
  void insert(Lpn lpn, AccessKey key);

  LockSearch search(Lpn lpn, AccessKey key) const;

  /// Removes `lpn` from whatever tree holds it. Returns false if unlocked.
  bool remove(Lpn lpn);

  bool is_locked(Lpn lpn) const { return locked_.contains(lpn); }
  std::size_t locked_count() const { return locked_.size(); }
  std::size_t key_count() const { return trees_.size(); }

  /// (key, ascending LPNs) records ordered by key.
  std::vector<std::pair<AccessKey, std::vector<Lpn>>> records() const;

  const Counters& counters() const { return counters_; }
  void reset_counters() { counters_ = {}; }
  void clear();

  /// Checks the membership invariants; used by tests.
  bool consistent() const;

 private:
  std::unordered_map<AccessKey, std::set<Lpn>> trees_;
  std::unordered_map<Lpn, AccessKey> locked_;
  mutable Counters counters_;
};

}  // namespace keyssd
