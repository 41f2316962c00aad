#include "keyssd/attack.hpp"

#include <random>

#include <fmt/format.h>

#include "keyssd/error.hpp"
#include "keyssd/workload.hpp"

namespace keyssd {

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::NormalPathEncrypt: return "NormalPathEncrypt";
    case AttackKind::DirectIoOverwrite: return "DirectIoOverwrite";
    case AttackKind::PageCacheExfiltrate: return "PageCacheExfiltrate";
    case AttackKind::BruteForce: return "BruteForce";
  }
  return "?";
}

std::string_view to_string(Step s) {
  switch (s) {
    case Step::Infection: return "Infection";
    case Step::Open: return "Open";
    case Step::Read: return "Read";
    case Step::KeyGuess: return "KeyGuess";
    case Step::Encrypt: return "Encrypt";
    case Step::WriteCopy: return "WriteCopy";
    case Step::Overwrite: return "Overwrite";
    case Step::Delete: return "Delete";
    case Step::Notice: return "Notice";
  }
  return "?";
}

Bytes scramble(std::span<const std::uint8_t> data, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0xC3A5C85C97CB3127ULL);
  Bytes out(data.begin(), data.end());
  std::uint8_t carry = 0x5A;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto pad = static_cast<std::uint8_t>(rng());
    const auto mixed = static_cast<std::uint8_t>(out[i] ^ pad ^ carry);
    out[i] = static_cast<std::uint8_t>((mixed << 3) | (mixed >> 5));
    carry = out[i];
  }
  return out;
}

namespace {

constexpr ClientId kOwner = 0;
constexpr ClientId kAttacker = 1;
const std::string kCopyPath = "/infected.db";

class ScenarioRun {
 public:
  explicit ScenarioRun(const ScenarioConfig& config) : config_(config), rig_(rig_config(config)) {
    verdict_.kind = config.kind;
  }

  ScenarioVerdict run() {
    const std::uint64_t default_bytes =
        config_.kind == AttackKind::DirectIoOverwrite ? (1ULL << 20) : (64ULL << 10);
    size_ = config_.victim_bytes != 0 ? config_.victim_bytes : default_bytes;
    plant_victim();
    attacker_key_ = config_.attacker_has_key ? owner_key() : kNoKey;

    record(Step::Infection, true, "scripted foothold");
    switch (config_.kind) {
      case AttackKind::NormalPathEncrypt:
        normal_path();
        break;
      case AttackKind::DirectIoOverwrite:
        direct_overwrite();
        break;
      case AttackKind::PageCacheExfiltrate:
        page_cache();
        break;
      case AttackKind::BruteForce:
        brute_force();
        break;
    }
    if (!verdict_.blocked_at) {
      record(Step::Notice, true, "ransom note left");
    }
    for (const LogRecord& r : rig_.log.records()) {
      if (r.layer != LogLayer::Host) {
        verdict_.device_log.push_back(format_record(r));
      }
    }
    verdict_.original_intact = victim_intact();
    return std::move(verdict_);
  }

 private:
  static RigConfig rig_config(const ScenarioConfig& c) {
    RigConfig rc;
    rc.ftl.variant = c.variant;
    rc.ftl.lockout_threshold = c.lockout_threshold;
    rc.host.read_verify = c.read_verify;
    return rc;
  }

  AccessKey owner_key() const { return config_.lock_victim ? kOwnerKey : kNoKey; }

  bool record(Step step, bool ok, std::string detail) {
    verdict_.steps.push_back({step, ok, std::move(detail)});
    if (!ok && !verdict_.blocked_at) {
      verdict_.blocked_at = step;
    }
    return ok;
  }

  void plant_victim() {
    HostStack& host = rig_.host;
    if (config_.kind == AttackKind::DirectIoOverwrite) {
      host.create(config_.victim_path, kPinnedVictimLba);
    }
    original_.clear();
    for (std::uint64_t p = 0; p * kSmallFileBytes < size_; ++p) {
      const Bytes page = pattern_page(config_.seed, 7, p, kSmallFileBytes);
      original_.insert(original_.end(), page.begin(), page.end());
    }
    original_.resize(size_);
    const FileHandle h = host.open_key(config_.victim_path, owner_key(), kOwner, true);
    host.file_write(h, 0, original_);
    host.close_key(h);
    victim_lbas_ = host.files().address_space(*host.files().lookup(config_.victim_path));
  }

  // Ground truth straight from the FTL with the owner's key.
  bool victim_intact() {
    auto id = rig_.host.files().lookup(config_.victim_path);
    if (!id) {
      return false;
    }
    if (rig_.ftl.locked_out()) {
      rig_.ftl.admin_reset_lockout();
    }
    const std::uint64_t hp = rig_.link.geometry().host_page_bytes;
    Bytes content;
    for (Lba lba : rig_.host.files().address_space(*id)) {
      const ReadResult r = rig_.ftl.read(rig_.link.lba_to_lpn(lba), 1, owner_key());
      if (r.verdict != Verdict::Granted) {
        return false;
      }
      content.insert(content.end(), r.data.begin(), r.data.begin() + hp);
    }
    content.resize(std::min<std::size_t>(content.size(), size_));
    return content == original_;
  }

  // Open + whole-file read through the normal file path.
  std::optional<Bytes> attacker_read(Step step_on_open_denial, FileHandle* handle) {
    HostStack& host = rig_.host;
    try {
      *handle = host.open_key(config_.victim_path, attacker_key_, kAttacker);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OpenDeniedByDevice) {
        throw;
      }
      record(step_on_open_denial, false, "open refused by read-verify");
      return std::nullopt;
    }
    if (step_on_open_denial == Step::Open) {
      record(Step::Open, true, "handle obtained");
    }
    try {
      Bytes data = host.file_read(*handle, 0, size_);
      verdict_.leaked = data == original_;
      record(Step::Read, true, fmt::format("{} bytes", data.size()));
      return data;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AccessDenied) {
        throw;
      }
      host.close_key(*handle);
      record(Step::Read, false, "device denied read");
      return std::nullopt;
    }
  }

  void encrypt_copy_delete(const Bytes& plain, FileHandle handle) {
    HostStack& host = rig_.host;
    const Bytes cipher = scramble(plain, config_.seed);
    record(Step::Encrypt, true, "in-memory transform");
    try {
      const FileHandle out = host.open_key(kCopyPath, attacker_key_, kAttacker, true);
      host.file_write(out, 0, cipher);
      host.close_key(out);
      record(Step::WriteCopy, true, kCopyPath);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AccessDenied && e.code() != ErrorCode::OpenDeniedByDevice) {
        throw;
      }
      host.close_key(handle);
      record(Step::WriteCopy, false, e.what());
      return;
    }
    host.close_key(handle);
    try {
      host.file_delete(config_.victim_path, attacker_key_);
      record(Step::Delete, true, "original removed");
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DeleteDenied) {
        throw;
      }
      record(Step::Delete, false, "device refused delete");
    }
  }

  void normal_path() {
    FileHandle h = 0;
    // Open and read together form the attacker's read of the victim.
    if (auto plain = attacker_read(Step::Read, &h)) {
      encrypt_copy_delete(*plain, h);
    }
  }

  void page_cache() {
    HostStack& host = rig_.host;
    if (config_.warm_cache) {
      const FileHandle h = host.open_key(config_.victim_path, owner_key(), kOwner);
      host.file_read(h, 0, size_);
      host.close_key(h);
    }
    FileHandle h = 0;
    if (auto plain = attacker_read(Step::Open, &h)) {
      encrypt_copy_delete(*plain, h);
    }
  }

  void collect(const std::vector<Completion>& completions) {
    for (const Completion& c : completions) {
      if (c.status == CompletionStatus::Success) {
        verdict_.granted_lbas.push_back(c.lba);
      } else {
        verdict_.denied_lbas.push_back(c.lba);
      }
    }
  }

  void direct_overwrite() {
    constexpr std::uint64_t kSectors = 48;  // 24 KiB
    const std::uint64_t hp = rig_.link.geometry().host_page_bytes;
    const std::uint64_t pages = kSectors / rig_.link.geometry().sectors_per_host_page();
    const Bytes garbage = scramble(Bytes(pages * hp, 0), config_.seed);
    const Lba start = victim_lbas_.front();
    if (attacker_key_.is_none()) {
      collect(rig_.host.raw_io(start, kSectors, RawOp::Write, garbage));
    } else {
      // An application that owns the key issuing O_DIRECT writes.
      std::vector<Completion> out;
      for (std::uint64_t i = 0; i < pages; ++i) {
        const Lba lba = start + i * rig_.link.geometry().sectors_per_host_page();
        const FisFrame frame = encode_register_fis(
            AtaCommand::WriteDmaExt, lba, rig_.link.geometry().sectors_per_host_page(), attacker_key_);
        rig_.link.submit(frame, Bytes(garbage.begin() + i * hp, garbage.begin() + (i + 1) * hp));
      }
      out = rig_.link.device_drain();
      collect(out);
    }
    record(Step::Overwrite, verdict_.denied_lbas.empty(),
           fmt::format("{} denied of {}", verdict_.denied_lbas.size(), pages));
  }

  Completion direct(AtaCommand cmd, Lba lba, AccessKey key, Bytes data = {}) {
    const std::uint64_t spp = rig_.link.geometry().sectors_per_host_page();
    return rig_.link.execute(encode_register_fis(cmd, lba, spp, key), std::move(data));
  }

  void brute_force() {
    const std::uint64_t max =
        config_.max_guesses != 0 ? config_.max_guesses : config_.lockout_threshold + 8;
    std::mt19937_64 rng(config_.seed);
    const Lba target = victim_lbas_.front();
    std::optional<AccessKey> found;
    for (std::uint64_t attempt = 1; attempt <= max; ++attempt) {
      AccessKey guess;
      if (attempt == config_.planted_at) {
        guess = kOwnerKey;
      } else {
        do {
          guess = AccessKey(static_cast<std::uint32_t>(rng()));
        } while (guess.is_none() || guess == kOwnerKey);
      }
      const Completion c = direct(AtaCommand::ReadDmaExt, target, guess);
      verdict_.attempts = attempt;
      if (c.status == CompletionStatus::DeviceLockedOut) {
        ++verdict_.refused_after_lockout;
        continue;
      }
      if (c.status == CompletionStatus::Success) {
        verdict_.breach_at = attempt;
        found = guess;
        break;
      }
      if (rig_.ftl.locked_out() && !verdict_.lockout_at) {
        verdict_.lockout_at = attempt;
      }
    }
    if (!record(Step::KeyGuess, found.has_value(),
                found ? fmt::format("key found at attempt {}", *verdict_.breach_at)
                      : fmt::format("{} guesses, lockout at {}", verdict_.attempts,
                                    verdict_.lockout_at.value_or(0)))) {
      return;
    }

    Bytes plain;
    for (Lba lba : victim_lbas_) {
      const Completion c = direct(AtaCommand::ReadDmaExt, lba, *found);
      if (c.status != CompletionStatus::Success) {
        record(Step::Read, false, "device denied read at " + hex(lba));
        return;
      }
      plain.insert(plain.end(), c.payload.begin(), c.payload.end());
    }
    plain.resize(size_);
    verdict_.leaked = plain == original_;
    record(Step::Read, true, fmt::format("{} bytes", plain.size()));

    Bytes cipher = scramble(plain, config_.seed);
    record(Step::Encrypt, true, "in-memory transform");
    const std::uint64_t hp = rig_.link.geometry().host_page_bytes;
    cipher.resize(victim_lbas_.size() * hp, 0);
    for (std::size_t i = 0; i < victim_lbas_.size(); ++i) {
      const Completion c =
          direct(AtaCommand::WriteDmaExt, victim_lbas_[i], *found,
                 Bytes(cipher.begin() + i * hp, cipher.begin() + (i + 1) * hp));
      if (c.status != CompletionStatus::Success) {
        record(Step::Overwrite, false, "device denied write at " + hex(victim_lbas_[i]));
        return;
      }
    }
    record(Step::Overwrite, true, "victim encrypted in place");
  }

  ScenarioConfig config_;
  Rig rig_;
  ScenarioVerdict verdict_;
  std::uint64_t size_ = 0;
  Bytes original_;
  std::vector<Lba> victim_lbas_;
  AccessKey attacker_key_;
};

}  // namespace

ScenarioVerdict run_scenario(const ScenarioConfig& config) {
  if (config.lockout_threshold == 0) {
    throw Error(ErrorCode::ConfigError, "lockout_threshold must be positive");
  }
  ScenarioRun run(config);
  return run.run();
}

std::vector<std::string> format_verdict(const ScenarioVerdict& v) {
  std::vector<std::string> out;
  out.push_back(fmt::format("scenario={} blocked_at={} breach={} original_intact={} leaked={}",
                            to_string(v.kind),
                            v.blocked_at ? to_string(*v.blocked_at) : std::string_view("none"),
                            v.breached() ? "yes" : "no", v.original_intact ? "yes" : "no",
                            v.leaked ? "yes" : "no"));
  for (const StepOutcome& s : v.steps) {
    out.push_back(fmt::format("step={} outcome={} detail={}", to_string(s.step),
                              s.ok ? "ok" : "blocked", s.detail));
  }
  for (Lba lba : v.denied_lbas) {
    out.push_back(fmt::format("denied_lba={}", hex(lba)));
  }
  if (v.kind == AttackKind::BruteForce) {
    out.push_back(fmt::format("attempts={} lockout_at={} breach_at={} refused_after_lockout={}",
                              v.attempts,
                              v.lockout_at ? std::to_string(*v.lockout_at) : "none",
                              v.breach_at ? std::to_string(*v.breach_at) : "none",
                              v.refused_after_lockout));
  }
  return out;
}

}  // namespace keyssd
