#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>

#include "keyssd/types.hpp"

namespace keyssd {

/// Naive authorization model: a flat map from host page to registered key,
/// with the grant/deny rules applied page by page. No flash, no mapping.
class ReferenceModel {
 public:
  enum class Outcome { Grant, Deny };

  Outcome read(Lpn first, std::uint64_t count, AccessKey key, MultiMode mode) const;
  /// Granted writes register `key` on every unregistered page unless it is
  /// the sentinel.
  Outcome write(Lpn first, std::uint64_t count, AccessKey key, MultiMode mode);
  /// Granted trims forget the keys.
  Outcome trim(Lpn first, std::uint64_t count, AccessKey key);

  std::optional<AccessKey> key_of(Lpn lpn) const;
  std::size_t locked_pages() const { return keys_.size(); }
  void clear() { keys_.clear(); }

 private:
  Outcome check(Lpn first, std::uint64_t count, AccessKey key, MultiMode mode) const;

  std::unordered_map<Lpn, AccessKey> keys_;
};

}  // namespace keyssd
