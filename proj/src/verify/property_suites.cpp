#include "keyssd/property_suites.hpp"

#include <array>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "keyssd/error.hpp"
#include "keyssd/flash_device.hpp"
#include "keyssd/key_ftl.hpp"
#include "keyssd/reference_model.hpp"
#include "keyssd/register_fis.hpp"

namespace keyssd {

namespace {

constexpr Lpn kLpnSpace = 256;

FlashGeometry small_geometry() {
  FlashGeometry g;
  g.blocks_per_device = 16;
  g.pages_per_block = 32;
  return g;
}

// Eight ordinary keys plus the sentinel.
const std::array<AccessKey, 9> kKeys = {
    AccessKey(0x00000033), AccessKey(0x00000018), AccessKey(0x00FFFFFF), AccessKey(0x12345678),
    AccessKey(0x0000BEEF), AccessKey(0x00000001), AccessKey(0xDEADBEEF), AccessKey(0x7FFFFFFF),
    kNoKey};

AccessKey pick_key(std::mt19937_64& rng) { return kKeys[rng() % kKeys.size()]; }

Bytes page_payload(std::mt19937_64& rng, std::uint64_t pages, std::uint64_t page_bytes) {
  Bytes out(pages * page_bytes);
  const auto fill = static_cast<std::uint8_t>(rng());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(fill + i * 31);
  }
  return out;
}

bool granted(Verdict v) { return v == Verdict::Granted; }
bool granted(ReferenceModel::Outcome o) { return o == ReferenceModel::Outcome::Grant; }

void note(SuiteResult& r, std::string what) {
  if (r.failures++ == 0) {
    r.first_failure = std::move(what);
  }
}

FtlConfig oracle_config(FtlVariant variant) {
  FtlConfig c;
  c.variant = variant;
  c.read_mode = MultiMode::AllLpns;
  c.write_mode = MultiMode::AllLpns;
  c.lockout_threshold = std::numeric_limits<std::uint64_t>::max();
  return c;
}

// Verdict table over every (lpn, key) pair.
std::vector<bool> probe_table(const KeyFtl& ftl) {
  std::vector<bool> out;
  out.reserve(kLpnSpace * kKeys.size());
  for (Lpn lpn = 0; lpn < kLpnSpace; ++lpn) {
    for (AccessKey k : kKeys) {
      out.push_back(granted(ftl.probe(lpn, k)));
    }
  }
  return out;
}

}  // namespace

SuiteResult oracle_equivalence_suite(const VerifyOptions& opt) {
  SuiteResult r{"oracle-equivalence", 0, 0, {}};
  const FlashGeometry g = small_geometry();
  FlashDevice flash_s(g);
  FlashDevice flash_d(g);
  KeyFtl fs(flash_s, oracle_config(FtlVariant::KeyStatic));
  KeyFtl fd(flash_d, oracle_config(FtlVariant::KeyDynamic));
  ReferenceModel model;
  std::mt19937_64 rng(opt.seed);
  const std::uint64_t fault_at = opt.oracle_ops / 2;

  for (std::uint64_t i = 0; i < opt.oracle_ops; ++i) {
    const std::uint64_t count = 1 + rng() % 4;
    const Lpn lpn = rng() % (kLpnSpace - count + 1);
    const AccessKey key = pick_key(rng);
    const unsigned dice = rng() % 100;
    bool vs = false;
    bool vd = false;
    bool vm = false;
    std::string op;
    if (dice < 45) {
      op = "write";
      const Bytes data = page_payload(rng, count, g.host_page_bytes);
      vs = granted(fs.write(lpn, key, data));
      vd = granted(fd.write(lpn, key, data));
      vm = granted(model.write(lpn, count, key, MultiMode::AllLpns));
    } else if (dice < 95) {
      op = "read";
      const ReadResult rs = fs.read(lpn, count, key);
      const ReadResult rd = fd.read(lpn, count, key);
      vs = granted(rs.verdict);
      vd = granted(rd.verdict);
      vm = granted(model.read(lpn, count, key, MultiMode::AllLpns));
      if (vs && vd && rs.data != rd.data) {
        note(r, fmt::format("op {}: data differs between variants at lpn {}", i, lpn));
      }
    } else {
      op = "trim";
      vs = granted(fs.trim(lpn, count, key));
      vd = granted(fd.trim(lpn, count, key));
      vm = granted(model.trim(lpn, count, key));
    }
    if (opt.inject_fault && i == fault_at) {
      vs = !vs;
    }
    ++r.cases;
    if (vs != vm || vd != vm) {
      note(r, fmt::format("op {} {} lpn={} count={} key={}: static={} dynamic={} oracle={}", i,
                          op, lpn, count, mask_key(key), vs, vd, vm));
    }
  }
  return r;
}

SuiteResult crash_recovery_suite(const VerifyOptions& opt) {
  SuiteResult r{"crash-recovery", 0, 0, {}};
  const FlashGeometry g = small_geometry();
  std::mt19937_64 rng(opt.seed ^ 0xC0FFEE);
  for (std::uint64_t s = 0; s < opt.crash_sequences; ++s) {
    const FtlVariant variant = s % 2 == 0 ? FtlVariant::KeyStatic : FtlVariant::KeyDynamic;
    FlashDevice flash(g);
    KeyFtl ftl(flash, oracle_config(variant));
    ReferenceModel model;
    const std::uint64_t n = 1 + rng() % 64;
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint64_t count = 1 + rng() % 3;
      const Lpn lpn = rng() % (kLpnSpace - count + 1);
      const AccessKey key = pick_key(rng);
      const unsigned dice = rng() % 100;
      if (dice < 60) {
        ftl.write(lpn, key, page_payload(rng, count, g.host_page_bytes));
        model.write(lpn, count, key, MultiMode::AllLpns);
      } else if (dice < 85) {
        ftl.read(lpn, count, key);
      } else if (dice < 92) {
        ftl.trim(lpn, count, key);
        model.trim(lpn, count, key);
      } else {
        ftl.handle_flush(rng() % 2 == 0 ? FlushMode::AllFlush : FlushMode::SelectiveFlush);
      }
    }
    ftl.handle_flush(rng() % 2 == 0 ? FlushMode::AllFlush : FlushMode::SelectiveFlush);

    const std::vector<bool> before = probe_table(ftl);
    std::vector<Bytes> data_before;
    for (Lpn lpn = 0; lpn < kLpnSpace; ++lpn) {
      data_before.push_back(ftl.read(lpn, 1, model.key_of(lpn).value_or(kNoKey)).data);
    }

    ftl.power_cut();
    try {
      ftl.recover();
    } catch (const Error& e) {
      ++r.cases;
      note(r, fmt::format("sequence {}: recover failed: {}", s, e.what()));
      continue;
    }

    const std::vector<bool> after = probe_table(ftl);
    ++r.cases;
    if (before != after) {
      note(r, fmt::format("sequence {} ({}): verdicts changed across power cut", s,
                          to_string(variant)));
      continue;
    }
    for (Lpn lpn = 0; lpn < kLpnSpace; ++lpn) {
      const AccessKey owner = model.key_of(lpn).value_or(kNoKey);
      bool agrees = true;
      for (AccessKey k : kKeys) {
        const bool expect = !model.key_of(lpn) || *model.key_of(lpn) == k;
        agrees = agrees && granted(ftl.probe(lpn, k)) == expect;
      }
      if (!agrees) {
        note(r, fmt::format("sequence {}: lpn {} verdicts differ from oracle", s, lpn));
        break;
      }
      if (ftl.read(lpn, 1, owner).data != data_before[lpn]) {
        note(r, fmt::format("sequence {}: lpn {} data differs after recovery", s, lpn));
        break;
      }
    }
  }
  return r;
}

SuiteResult codec_roundtrip_suite(const VerifyOptions& opt) {
  SuiteResult r{"codec-roundtrip", 0, 0, {}};
  std::mt19937_64 rng(opt.seed ^ 0xF15);
  constexpr AtaCommand kCommands[] = {AtaCommand::ReadDmaExt, AtaCommand::WriteDmaExt,
                                      AtaCommand::FlushCacheExt, AtaCommand::DataSetManagement};
  for (std::uint64_t i = 0; i < opt.codec_frames; ++i) {
    RegisterFis fis;
    fis.command = static_cast<std::uint8_t>(kCommands[rng() % 4]);
    fis.features = static_cast<std::uint8_t>(rng());
    fis.lba = rng() & kMaxLba48;
    fis.device = static_cast<std::uint8_t>(rng());
    fis.features_exp = static_cast<std::uint8_t>(rng());
    fis.sector_count = static_cast<std::uint16_t>(rng());
    fis.reserved = static_cast<std::uint8_t>(rng());
    fis.control = static_cast<std::uint8_t>(rng());
    fis.key = rng() % 10 == 0 ? kNoKey : AccessKey(static_cast<std::uint32_t>(rng()));
    const FisFrame frame = encode(fis);
    const RegisterFis back = decode_register_fis(frame);
    ++r.cases;
    if (!(back == fis) || encode(back) != frame) {
      note(r, fmt::format("frame {}: {} does not round-trip", i, to_hex(frame)));
    }
  }
  return r;
}

SuiteResult gc_transparency_suite(const VerifyOptions& opt) {
  SuiteResult r{"gc-transparency", 0, 0, {}};
  const FlashGeometry g = small_geometry();
  std::mt19937_64 rng(opt.seed ^ 0x6C);
  for (int round = 0; round < 8; ++round) {
    FlashDevice flash(g);
    KeyFtl ftl(flash, oracle_config(round % 2 == 0 ? FtlVariant::KeyStatic : FtlVariant::KeyDynamic));
    for (int i = 0; i < 400; ++i) {
      const Lpn lpn = rng() % kLpnSpace;
      ftl.write(lpn, pick_key(rng), page_payload(rng, 1, g.host_page_bytes));
    }
    const std::vector<bool> before = probe_table(ftl);
    for (int i = 0; i < 4; ++i) {
      try {
        ftl.run_gc();
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoSpace) {
          throw;
        }
      }
      ++r.cases;
      if (probe_table(ftl) != before) {
        note(r, fmt::format("round {}: verdicts changed after gc pass {}", round, i));
      }
    }
  }
  return r;
}

std::vector<SuiteResult> run_all_suites(const VerifyOptions& options) {
  return {oracle_equivalence_suite(options), crash_recovery_suite(options),
          codec_roundtrip_suite(options), gc_transparency_suite(options)};
}

}  // namespace keyssd
