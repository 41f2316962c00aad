#pragma once

// Test-side model of the block key rules, written independently of the
// library: a plain std::map from host page to key plus a denial counter.

#include <cstdint>
#include <map>
#include <optional>

namespace oracle {

constexpr std::uint32_t kNone = 0xFFFFFFFFu;

class KeyOracle {
 public:
  explicit KeyOracle(std::uint64_t threshold = UINT64_MAX) : threshold_(threshold) {}

  // true = granted
  bool read(std::uint64_t first, std::uint64_t count, std::uint32_t key, bool first_only) {
    if (locked_out()) return false;
    const bool ok = allowed(first, first_only ? 1 : count, key);
    if (!ok) ++denials_;
    return ok;
  }

  bool write(std::uint64_t first, std::uint64_t count, std::uint32_t key, bool first_only) {
    if (locked_out()) return false;
    const bool ok = allowed(first, first_only ? 1 : count, key);
    if (!ok) {
      ++denials_;
      return false;
    }
    if (key != kNone) {
      for (std::uint64_t p = first; p < first + count; ++p) {
        if (!keys_.count(p)) keys_[p] = key;
      }
    }
    return true;
  }

  bool trim(std::uint64_t first, std::uint64_t count, std::uint32_t key) {
    if (locked_out()) return false;
    const bool ok = allowed(first, count, key);
    if (!ok) {
      ++denials_;
      return false;
    }
    for (std::uint64_t p = first; p < first + count; ++p) keys_.erase(p);
    return true;
  }

  // Pure check, no counters.
  bool allowed(std::uint64_t first, std::uint64_t count, std::uint32_t key) const {
    for (std::uint64_t p = first; p < first + count; ++p) {
      auto it = keys_.find(p);
      if (it != keys_.end() && it->second != key) return false;
    }
    return true;
  }

  std::optional<std::uint32_t> key_of(std::uint64_t page) const {
    auto it = keys_.find(page);
    if (it == keys_.end()) return std::nullopt;
    return it->second;
  }

  bool locked_out() const { return denials_ >= threshold_; }
  std::uint64_t denials() const { return denials_; }
  const std::map<std::uint64_t, std::uint32_t>& keys() const { return keys_; }

 private:
  std::map<std::uint64_t, std::uint32_t> keys_;
  std::uint64_t threshold_;
  std::uint64_t denials_ = 0;
};

}  // namespace oracle
