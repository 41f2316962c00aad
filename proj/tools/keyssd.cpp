// keyssd: command-line front end for the keyed SSD simulator.
//
//   keyssd bench    [--config FILE] [--ftl static,dynamic] [--flush-mode AF,SF] ...
//   keyssd attack   [--config FILE] [--scenario direct] [--ftl baseline] ...
//   keyssd verify   [--seed N] [--inject-fault]
//   keyssd snapshot save|load --file IMAGE
//
// Exit codes: 0 ok / defense held, 1 property failure or breach, 2 config error.

#include <fstream>
#include <iostream>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "keyssd/attack.hpp"
#include "keyssd/bench.hpp"
#include "keyssd/config.hpp"
#include "keyssd/error.hpp"
#include "keyssd/property_suites.hpp"
#include "keyssd/rig.hpp"

namespace {

using namespace keyssd;

constexpr int kExitOk = 0;
constexpr int kExitFail = 1;
constexpr int kExitConfig = 2;

// Flag values are applied through the config parser so every source of
// settings reports errors the same way.
struct Overrides {
  std::string config_path;
  std::vector<std::pair<std::string, std::string>> settings;
  std::vector<std::string> raw;  // --set key=value

  void add(CLI::App* app, const std::string& flag, const std::string& key,
           const std::string& help) {
    app->add_option_function<std::string>(
        flag, [this, key](const std::string& v) { settings.emplace_back(key, v); }, help);
  }

  ExperimentConfig build() const {
    ExperimentConfig cfg;
    if (!config_path.empty()) {
      cfg = load_config_file(config_path);
    }
    for (const auto& [k, v] : settings) {
      apply_setting(cfg, k, v);
    }
    for (const std::string& kv : raw) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) {
        throw Error(ErrorCode::ConfigError, "--set expects key=value, got '" + kv + "'");
      }
      apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    validate(cfg);
    return cfg;
  }
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config_path, "key = value experiment file");
  o.add(app, "--ftl", "ftl", "baseline, static or dynamic (comma list for bench)");
  o.add(app, "--read-verify", "read_verify", "on or off");
  o.add(app, "--close-mode", "close_mode", "Close or NoClose");
  o.add(app, "--seed", "seed", "random seed");
  o.add(app, "--lockout-threshold", "lockout_threshold", "denials before lockout");
  app->add_option("--set", o.raw, "extra key=value setting (repeatable)");
}

int cmd_bench(const Overrides& o, const std::string& out_path) {
  const ExperimentConfig cfg = o.build();
  const std::vector<MetricsRow> rows = run_bench(cfg);
  if (out_path.empty() || out_path == "-") {
    write_csv(std::cout, rows);
  } else {
    std::ofstream out(out_path);
    if (!out) {
      throw Error(ErrorCode::ConfigError, "cannot write " + out_path);
    }
    write_csv(out, rows);
    for (const std::string& line : summarize(rows)) {
      std::cout << line << '\n';
    }
  }
  return kExitOk;
}

int cmd_attack(const Overrides& o, const std::string& out_path) {
  const ExperimentConfig cfg = o.build();
  const ScenarioVerdict v = run_scenario(cfg.scenario_config());
  std::vector<std::string> lines = format_verdict(v);
  constexpr std::size_t kExcerpt = 32;
  for (std::size_t i = 0; i < v.device_log.size() && i < kExcerpt; ++i) {
    lines.push_back("log " + v.device_log[i]);
  }
  if (v.device_log.size() > kExcerpt) {
    lines.push_back(fmt::format("log ... {} more", v.device_log.size() - kExcerpt));
  }
  for (const std::string& line : lines) {
    std::cout << line << '\n';
  }
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    for (const std::string& line : format_verdict(v)) {
      out << line << '\n';
    }
    for (const std::string& line : v.device_log) {
      out << "log " << line << '\n';
    }
  }
  return v.breached() ? kExitFail : kExitOk;
}

int cmd_verify(const VerifyOptions& options) {
  std::cout << "seed=" << options.seed << '\n';
  bool ok = true;
  for (const SuiteResult& r : run_all_suites(options)) {
    ok = ok && r.passed();
    std::cout << fmt::format("{} {} cases={} failures={}", r.passed() ? "PASS" : "FAIL", r.name,
                             r.cases, r.failures);
    if (!r.passed()) {
      std::cout << " first=\"" << r.first_failure << '"';
    }
    std::cout << '\n';
  }
  return ok ? kExitOk : kExitFail;
}

int cmd_snapshot_save(const Overrides& o, const std::string& file) {
  const ExperimentConfig cfg = o.build();
  RigConfig rc;
  rc.geometry = cfg.geometry;
  rc.ftl.variant = cfg.variants.front();
  rc.ftl.lockout_threshold = cfg.lockout_threshold;
  rc.host.read_verify = cfg.read_verify;
  Rig rig(rc);
  const WorkloadSpec spec = cfg.workload(cfg.queue_depths.front(), cfg.locked_fractions.front());
  prepare(rig.host, spec);
  run(rig.host, spec, generate(spec));
  rig.ftl.handle_flush(FlushMode::AllFlush);
  std::ofstream out(file, std::ios::binary);
  if (!out) {
    throw Error(ErrorCode::ConfigError, "cannot write " + file);
  }
  rig.flash.save_snapshot(out);
  std::cout << fmt::format("saved {} variant={} table_pages={} key_digest={:016x}\n", file,
                           to_string(rc.ftl.variant), rig.ftl.table_pages(),
                           rig.ftl.key_digest());
  return kExitOk;
}

int cmd_snapshot_load(const Overrides& o, const std::string& file) {
  const ExperimentConfig cfg = o.build();
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::ConfigError, "cannot read " + file);
  }
  FlashDevice flash = FlashDevice::load_snapshot(in);
  FtlConfig fc;
  fc.variant = cfg.variants.front();
  fc.lockout_threshold = cfg.lockout_threshold;
  KeyFtl ftl(flash, fc);
  std::uint64_t locked = 0;
  for (Lpn lpn = 0; lpn < ftl.capacity(); ++lpn) {
    locked += ftl.stored_key(lpn).has_value() ? 1 : 0;
  }
  std::cout << fmt::format(
      "loaded {} variant={} blocks={} locked_pages={} locked_out={} key_digest={:016x}\n", file,
      to_string(fc.variant), flash.geometry().blocks_per_device, locked,
      ftl.locked_out() ? "yes" : "no", ftl.key_digest());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"keyed SSD simulator"};
  app.require_subcommand(1);

  Overrides bench_o;
  std::string bench_out;
  CLI::App* bench = app.add_subcommand("bench", "run workload sweeps and write CSV metrics");
  add_common(bench, bench_o);
  bench_o.add(bench, "--flush-mode", "flush_mode", "AF, SF or a comma list");
  bench_o.add(bench, "--queue-depth", "queue_depth", "comma list of queue depths");
  bench_o.add(bench, "--locked-fraction", "locked_fraction", "comma list of percentages");
  bench_o.add(bench, "--pattern", "pattern", "SeqRead, SeqWrite, RandRead or RandWrite");
  bench_o.add(bench, "--profile", "profile", "small, big or raw");
  bench->add_option("--out", bench_out, "CSV output path (default stdout)");

  Overrides attack_o;
  std::string attack_out;
  CLI::App* attack = app.add_subcommand("attack", "run a scripted ransomware scenario");
  add_common(attack, attack_o);
  attack_o.add(attack, "--scenario", "scenario", "normal, direct, pagecache or bruteforce");
  attack_o.add(attack, "--attacker-has-key", "attacker_has_key", "attacker holds owner key");
  attack_o.add(attack, "--warm-cache", "warm_cache", "owner reads victim first");
  attack_o.add(attack, "--planted-at", "planted_at", "brute-force guess carrying the key");
  attack->add_option("--out", attack_out, "verdict record path");

  VerifyOptions verify_opts;
  CLI::App* verify = app.add_subcommand("verify", "run the built-in property suites");
  verify->add_option("--seed", verify_opts.seed, "random seed");
  verify->add_option("--ops", verify_opts.oracle_ops, "oracle-equivalence operations");
  verify->add_option("--sequences", verify_opts.crash_sequences, "crash-recovery sequences");
  verify->add_option("--frames", verify_opts.codec_frames, "codec round-trip frames");
  verify->add_flag("--inject-fault", verify_opts.inject_fault, "flip one verdict (self-test)");

  Overrides snap_o;
  std::string snap_file;
  CLI::App* snapshot = app.add_subcommand("snapshot", "save or load a device image");
  snapshot->require_subcommand(1);
  CLI::App* save = snapshot->add_subcommand("save", "run a workload, flush, dump the image");
  CLI::App* load = snapshot->add_subcommand("load", "mount an image and report its state");
  for (CLI::App* sub : {save, load}) {
    add_common(sub, snap_o);
    sub->add_option("--file", snap_file, "image path")->required();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (bench->parsed()) return cmd_bench(bench_o, bench_out);
    if (attack->parsed()) return cmd_attack(attack_o, attack_out);
    if (verify->parsed()) return cmd_verify(verify_opts);
    if (save->parsed()) return cmd_snapshot_save(snap_o, snap_file);
    if (load->parsed()) return cmd_snapshot_load(snap_o, snap_file);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::ConfigError:
      case ErrorCode::InvalidConfig:
        return kExitConfig;
      default:
        return kExitFail;
    }
  }
  return kExitFail;
}
