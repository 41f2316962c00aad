#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "keyssd/types.hpp"

namespace keyssd {

enum class AtaCommand : std::uint8_t {
  DataSetManagement = 0x06,  // trim
  ReadDmaExt = 0x25,
  WriteDmaExt = 0x35,
  FlushCacheExt = 0xE7,
};

inline constexpr std::uint8_t kFisTypeHostToDevice = 0x27;
inline constexpr std::uint8_t kFisFlagCommand = 0x80;
inline constexpr std::uint8_t kDeviceLbaMode = 0x40;
inline constexpr std::size_t kRegisterFisBytes = 20;
inline constexpr std::uint64_t kMaxLba48 = (std::uint64_t{1} << 48) - 1;

using FisFrame = std::array<std::uint8_t, kRegisterFisBytes>;

/// Host-to-device Register FIS. Five little-endian 32-bit words; the
/// otherwise reserved word 4 carries the access key.
///
///   word0: fis_type | flags | command | features
///   word1: lba[7:0] | lba[15:8] | lba[23:16] | device
///   word2: lba[31:24] | lba[39:32] | lba[47:40] | features_exp
///   word3: count[7:0] | count[15:8] | reserved | control
///   word4: key
struct RegisterFis {
  std::uint8_t fis_type = kFisTypeHostToDevice;
  std::uint8_t flags = kFisFlagCommand;
  std::uint8_t command = 0;
  std::uint8_t features = 0;
  std::uint64_t lba = 0;
  std::uint8_t device = kDeviceLbaMode;
  std::uint8_t features_exp = 0;
  std::uint16_t sector_count = 0;
  std::uint8_t reserved = 0;
  std::uint8_t control = 0;
  AccessKey key;

  friend bool operator==(const RegisterFis&, const RegisterFis&) = default;
};

/// Throws FieldOverflow if lba exceeds 48 bits or sector_count 16 bits.
FisFrame encode_register_fis(AtaCommand command, Lba lba, std::uint64_t sector_count,
                             AccessKey key);
FisFrame encode(const RegisterFis& fis);

/// Throws MalformedFrame on a wrong length or a non host-to-device type.
RegisterFis decode_register_fis(std::span<const std::uint8_t> frame);

std::string to_hex(std::span<const std::uint8_t> bytes);
FisFrame frame_from_hex(std::string_view hex);

std::string_view to_string(AtaCommand command);

}  // namespace keyssd
