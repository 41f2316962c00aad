#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace keyssd {

using Bytes = std::vector<std::uint8_t>;

/// Logical page number in host-page (4 KiB) units.
using Lpn = std::uint64_t;
/// Physical page number on the flash device.
using Ppn = std::uint64_t;
/// Block address in 512-byte sector units, as carried on the host interface.
using Lba = std::uint64_t;
using BlockId = std::uint64_t;

inline constexpr Ppn kUnmapped = std::numeric_limits<Ppn>::max();

/// 32-bit credential carried with every block request.
///
/// The all-ones word is reserved as the "no key supplied" sentinel. Every
/// other value, including 0xFFFFFF, is an ordinary key.
class AccessKey {
 public:
  constexpr AccessKey() = default;
  constexpr explicit AccessKey(std::uint32_t value) : value_(value) {}

  static constexpr AccessKey none() { return AccessKey{}; }

  constexpr std::uint32_t value() const { return value_; }
  constexpr bool is_none() const { return value_ == kNoKeyWord; }

  friend constexpr bool operator==(AccessKey, AccessKey) = default;
  friend constexpr auto operator<=>(AccessKey, AccessKey) = default;

  static constexpr std::uint32_t kNoKeyWord = 0xFFFFFFFFu;

 private:
  std::uint32_t value_ = kNoKeyWord;
};

inline constexpr AccessKey kNoKey = AccessKey::none();

/// Key rendered for logs: sentinel as "none", otherwise only the low byte.
std::string mask_key(AccessKey key);

/// Hex rendering with a 0x prefix, lowercase, no padding.
std::string hex(std::uint64_t value);

enum class FtlVariant { Baseline, KeyStatic, KeyDynamic };
enum class FlushMode { AllFlush, SelectiveFlush };

/// How a multi-page request is authorized.
enum class MultiMode { FirstLpnOnly, AllLpns };

std::string_view to_string(FtlVariant v);
std::string_view to_string(FlushMode m);
std::string_view to_string(MultiMode m);

}  // namespace keyssd

template <>
struct std::hash<keyssd::AccessKey> {
  std::size_t operator()(keyssd::AccessKey k) const noexcept {
    return std::hash<std::uint32_t>{}(k.value());
  }
};
