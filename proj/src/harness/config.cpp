#include "keyssd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "keyssd/error.hpp"

namespace keyssd {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

[[noreturn]] void bad_value(std::string_view what, std::string_view text) {
  throw Error(ErrorCode::ConfigError, fmt::format("invalid {} '{}'", what, text));
}

std::uint64_t parse_u64(std::string_view text) {
  text = trim(text);
  int base = 10;
  if (text.size() > 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) {
    text.remove_prefix(2);
    base = 16;
  }
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value, base);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    bad_value("number", text);
  }
  return value;
}

template <typename T, typename F>
std::vector<T> parse_list(std::string_view text, F&& one) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string_view item =
        trim(text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos));
    if (item.empty()) {
      bad_value("list item", text);
    }
    out.push_back(one(item));
    if (comma == std::string_view::npos) {
      break;
    }
    pos = comma + 1;
  }
  return out;
}

}  // namespace

FtlVariant parse_variant(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "baseline" || t == "none" || t == "off") return FtlVariant::Baseline;
  if (t == "static" || t == "s" || t == "keystatic") return FtlVariant::KeyStatic;
  if (t == "dynamic" || t == "d" || t == "keydynamic") return FtlVariant::KeyDynamic;
  bad_value("ftl variant", text);
}

FlushMode parse_flush_mode(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "af" || t == "all" || t == "allflush") return FlushMode::AllFlush;
  if (t == "sf" || t == "selective" || t == "selectiveflush") return FlushMode::SelectiveFlush;
  bad_value("flush mode", text);
}

CloseMode parse_close_mode(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "close") return CloseMode::Close;
  if (t == "noclose" || t == "no-close") return CloseMode::NoClose;
  bad_value("close mode", text);
}

Pattern parse_pattern(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "seqread") return Pattern::SeqRead;
  if (t == "seqwrite") return Pattern::SeqWrite;
  if (t == "randread") return Pattern::RandRead;
  if (t == "randwrite") return Pattern::RandWrite;
  bad_value("pattern", text);
}

FileProfile parse_profile(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "small" || t == "smallfiles") return FileProfile::SmallFiles;
  if (t == "big" || t == "bigfiles") return FileProfile::BigFiles;
  if (t == "raw" || t == "rawdevice") return FileProfile::RawDevice;
  bad_value("file profile", text);
}

AttackKind parse_attack(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "normal" || t == "normalpathencrypt") return AttackKind::NormalPathEncrypt;
  if (t == "direct" || t == "directiooverwrite") return AttackKind::DirectIoOverwrite;
  if (t == "pagecache" || t == "pagecacheexfiltrate") return AttackKind::PageCacheExfiltrate;
  if (t == "bruteforce" || t == "brute") return AttackKind::BruteForce;
  bad_value("scenario", text);
}

bool parse_bool(std::string_view text) {
  const std::string t = lower(trim(text));
  if (t == "1" || t == "true" || t == "on" || t == "yes") return true;
  if (t == "0" || t == "false" || t == "off" || t == "no") return false;
  bad_value("flag", text);
}

WorkloadSpec ExperimentConfig::workload(std::size_t queue_depth, unsigned locked_percent) const {
  WorkloadSpec w;
  w.pattern = pattern;
  w.queue_depth = queue_depth;
  w.profile = profile;
  w.file_count = file_count;
  w.file_bytes = file_bytes;
  w.region_lba = region_lba;
  w.region_bytes = region_bytes;
  w.client_count = clients;
  w.seed = seed;
  w.ops = ops;
  w.flush_interval = flush_interval;
  w.locked_percent = locked_percent;
  return w;
}

ScenarioConfig ExperimentConfig::scenario_config() const {
  ScenarioConfig s;
  s.kind = scenario;
  s.variant = variants.empty() ? FtlVariant::KeyStatic : variants.front();
  s.read_verify = read_verify;
  s.lockout_threshold = lockout_threshold;
  s.seed = seed;
  s.lock_victim = lock_victim;
  s.attacker_has_key = attacker_has_key;
  s.warm_cache = warm_cache;
  s.planted_at = planted_at;
  s.max_guesses = max_guesses;
  return s;
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  const std::string k = lower(trim(key));
  value = trim(value);
  try {
    if (k == "ftl" || k == "ftl_variant") {
      c.variants = parse_list<FtlVariant>(value, parse_variant);
    } else if (k == "flush_mode") {
      c.flush_modes = parse_list<FlushMode>(value, parse_flush_mode);
    } else if (k == "queue_depth") {
      c.queue_depths = parse_list<std::size_t>(
          value, [](std::string_view v) { return static_cast<std::size_t>(parse_u64(v)); });
    } else if (k == "locked_fraction") {
      c.locked_fractions = parse_list<unsigned>(
          value, [](std::string_view v) { return static_cast<unsigned>(parse_u64(v)); });
    } else if (k == "flush_interval") {
      c.flush_interval = parse_u64(value);
    } else if (k == "read_verify") {
      c.read_verify = parse_bool(value);
    } else if (k == "close_mode") {
      c.close_mode = parse_close_mode(value);
    } else if (k == "lockout_threshold") {
      c.lockout_threshold = parse_u64(value);
    } else if (k == "cache_pages") {
      c.cache_pages = parse_u64(value);
    } else if (k == "seed") {
      c.seed = parse_u64(value);
    } else if (k == "pattern") {
      c.pattern = parse_pattern(value);
    } else if (k == "profile" || k == "file_profile") {
      c.profile = parse_profile(value);
    } else if (k == "file_count") {
      c.file_count = parse_u64(value);
    } else if (k == "file_bytes") {
      c.file_bytes = parse_u64(value);
    } else if (k == "region_lba") {
      c.region_lba = parse_u64(value);
    } else if (k == "region_bytes") {
      c.region_bytes = parse_u64(value);
    } else if (k == "ops") {
      c.ops = parse_u64(value);
    } else if (k == "clients" || k == "client_count") {
      c.clients = static_cast<std::uint32_t>(parse_u64(value));
    } else if (k == "blocks") {
      c.geometry.blocks_per_device = parse_u64(value);
    } else if (k == "pages_per_block") {
      c.geometry.pages_per_block = parse_u64(value);
    } else if (k == "device_page_bytes") {
      c.geometry.device_page_bytes = parse_u64(value);
    } else if (k == "host_page_bytes") {
      c.geometry.host_page_bytes = parse_u64(value);
    } else if (k == "scenario") {
      c.scenario = parse_attack(value);
    } else if (k == "attacker_has_key") {
      c.attacker_has_key = parse_bool(value);
    } else if (k == "warm_cache") {
      c.warm_cache = parse_bool(value);
    } else if (k == "lock_victim") {
      c.lock_victim = parse_bool(value);
    } else if (k == "planted_at") {
      c.planted_at = parse_u64(value);
    } else if (k == "max_guesses") {
      c.max_guesses = parse_u64(value);
    } else {
      throw Error(ErrorCode::ConfigError, "unknown field");
    }
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, fmt::format("field '{}': {}", k, e.detail()));
  }
}

ExperimentConfig parse_config(std::string_view text, ExperimentConfig base) {
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::string_view view = line;
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) {
      continue;
    }
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError, fmt::format("line {}: expected 'key = value'", number));
    }
    try {
      apply_setting(base, view.substr(0, eq), view.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, fmt::format("line {}: {}", number, e.detail()));
    }
  }
  return base;
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::ConfigError, "cannot open config file " + path);
  }
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), std::move(base));
}

void validate(const ExperimentConfig& c) {
  auto fail = [](std::string_view field, std::string_view why) {
    throw Error(ErrorCode::ConfigError, fmt::format("field '{}': {}", field, why));
  };
  try {
    c.geometry.validate();
  } catch (const Error& e) {
    fail("geometry", e.detail());
  }
  if (c.variants.empty()) fail("ftl", "empty list");
  if (c.flush_modes.empty()) fail("flush_mode", "empty list");
  if (c.queue_depths.empty()) fail("queue_depth", "empty list");
  for (std::size_t q : c.queue_depths) {
    if (q == 0 || q > SataLink::kQueueCapacity) fail("queue_depth", "must be in 1..128");
  }
  if (c.locked_fractions.empty()) fail("locked_fraction", "empty list");
  for (unsigned f : c.locked_fractions) {
    if (f > 100) fail("locked_fraction", "must be a percentage");
  }
  if (c.lockout_threshold == 0) fail("lockout_threshold", "must be positive");
  if (c.cache_pages == 0) fail("cache_pages", "must be positive");
  if (c.clients == 0) fail("clients", "must be positive");
  if (c.profile != FileProfile::RawDevice && c.file_count == 0) fail("file_count", "must be positive");
}

}  // namespace keyssd
