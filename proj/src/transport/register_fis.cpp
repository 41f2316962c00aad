#include "keyssd/register_fis.hpp"

#include <fmt/format.h>

#include "keyssd/error.hpp"

namespace keyssd {

FisFrame encode_register_fis(AtaCommand command, Lba lba, std::uint64_t sector_count,
                             AccessKey key) {
  if (lba > kMaxLba48) {
    throw Error(ErrorCode::FieldOverflow, "lba " + hex(lba) + " exceeds 48 bits");
  }
  if (sector_count > 0xFFFF) {
    throw Error(ErrorCode::FieldOverflow, "sector count " + std::to_string(sector_count));
  }
  RegisterFis fis;
  fis.command = static_cast<std::uint8_t>(command);
  fis.lba = lba;
  fis.sector_count = static_cast<std::uint16_t>(sector_count);
  fis.key = key;
  return encode(fis);
}

FisFrame encode(const RegisterFis& fis) {
  if (fis.lba > kMaxLba48) {
    throw Error(ErrorCode::FieldOverflow, "lba " + hex(fis.lba) + " exceeds 48 bits");
  }
  FisFrame f{};
  f[0] = fis.fis_type;
  f[1] = fis.flags;
  f[2] = fis.command;
  f[3] = fis.features;
  f[4] = static_cast<std::uint8_t>(fis.lba);
  f[5] = static_cast<std::uint8_t>(fis.lba >> 8);
  f[6] = static_cast<std::uint8_t>(fis.lba >> 16);
  f[7] = fis.device;
  f[8] = static_cast<std::uint8_t>(fis.lba >> 24);
  f[9] = static_cast<std::uint8_t>(fis.lba >> 32);
  f[10] = static_cast<std::uint8_t>(fis.lba >> 40);
  f[11] = fis.features_exp;
  f[12] = static_cast<std::uint8_t>(fis.sector_count);
  f[13] = static_cast<std::uint8_t>(fis.sector_count >> 8);
  f[14] = fis.reserved;
  f[15] = fis.control;
  const std::uint32_t key = fis.key.value();
  for (int i = 0; i < 4; ++i) {
    f[16 + i] = static_cast<std::uint8_t>(key >> (8 * i));
  }
  return f;
}

RegisterFis decode_register_fis(std::span<const std::uint8_t> f) {
  if (f.size() != kRegisterFisBytes) {
    throw Error(ErrorCode::MalformedFrame, "frame of " + std::to_string(f.size()) + " bytes");
  }
  if (f[0] != kFisTypeHostToDevice) {
    throw Error(ErrorCode::MalformedFrame, "fis type " + hex(f[0]));
  }
  RegisterFis fis;
  fis.fis_type = f[0];
  fis.flags = f[1];
  fis.command = f[2];
  fis.features = f[3];
  fis.lba = std::uint64_t{f[4]} | std::uint64_t{f[5]} << 8 | std::uint64_t{f[6]} << 16 |
            std::uint64_t{f[8]} << 24 | std::uint64_t{f[9]} << 32 | std::uint64_t{f[10]} << 40;
  fis.device = f[7];
  fis.features_exp = f[11];
  fis.sector_count = static_cast<std::uint16_t>(f[12] | (f[13] << 8));
  fis.reserved = f[14];
  fis.control = f[15];
  fis.key = AccessKey{std::uint32_t{f[16]} | std::uint32_t{f[17]} << 8 |
                      std::uint32_t{f[18]} << 16 | std::uint32_t{f[19]} << 24};
  return fis;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve(bytes.size() * 2);
  for (std::uint8_t b : bytes) {
    out += fmt::format("{:02x}", b);
  }
  return out;
}

FisFrame frame_from_hex(std::string_view text) {
  std::string digits;
  for (char c : text) {
    if (c != ' ' && c != ':') {
      digits += c;
    }
  }
  if (digits.size() != 2 * kRegisterFisBytes) {
    throw Error(ErrorCode::MalformedFrame, "hex frame needs 40 digits");
  }
  FisFrame f{};
  for (std::size_t i = 0; i < kRegisterFisBytes; ++i) {
    f[i] = static_cast<std::uint8_t>(std::stoul(digits.substr(2 * i, 2), nullptr, 16));
  }
  return f;
}

std::string_view to_string(AtaCommand command) {
  switch (command) {
    case AtaCommand::DataSetManagement:
      return "TRIM";
    case AtaCommand::ReadDmaExt:
      return "READ";
    case AtaCommand::WriteDmaExt:
      return "WRITE";
    case AtaCommand::FlushCacheExt:
      return "FLUSH";
  }
  return "?";
}

}  // namespace keyssd
