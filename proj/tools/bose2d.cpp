// bose2d command line: sweep, selftest and the individual pipeline stages.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bose2d/config.hpp"
#include "bose2d/errors.hpp"
#include "bose2d/pipeline.hpp"
#include "bose2d/selftest.hpp"
#include "bose2d/streams.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;
constexpr int kNumerical = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> streams;
  std::optional<std::size_t> samples;
  std::optional<std::string> out;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--streams", o.streams, "number of random streams")->check(CLI::PositiveNumber);
  cmd->add_option("--samples", o.samples, "number of classical samples")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "output directory");
}

bose2d::ExperimentConfig load(const std::string& path, const Overrides& o) {
  auto cfg = bose2d::load_config(path);
  if (o.seed) cfg.ensemble.seed = cfg.wick_ensemble.seed = *o.seed;
  if (o.streams) cfg.ensemble.streams = cfg.wick_ensemble.streams = *o.streams;
  if (o.samples) cfg.ensemble.samples = cfg.wick_ensemble.samples = *o.samples;
  if (o.out) cfg.output = *o.out;
  return cfg;
}

void print_verdict(const bose2d::Verdict& v) {
  for (const auto& q : v.quantities) {
    std::cout << (q.pass ? "PASS " : "FAIL ") << q.name << ": terminal " << q.terminal
              << (q.monotone ? ", decreasing" : ", not decreasing") << ", slope " << q.slope << '\n';
  }
  if (!v.rows_ok) std::cout << "FAIL some rows did not complete\n";
  std::cout << (v.pass ? "verdict: pass" : "verdict: fail") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bose2d: finite-mode quantum Bose gas vs. Wick-renormalized classical field"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(bose2d::kToolVersion));

  Overrides o;
  std::string cfg_path;
  std::string dir;
  bool fault = false;

  auto* sweep = app.add_subcommand("sweep", "full comparison over the temperature schedule");
  sweep->add_option("config", cfg_path)->required();
  add_overrides(sweep, o);

  auto* selftest = app.add_subcommand("selftest", "fast identity checks and closed-form oracles");
  selftest->add_flag("--inject-counterterm-fault", fault, "test hook: corrupt the counterterm")->group("");

  auto* classical = app.add_subcommand("classical-sample", "reweighted classical ensemble summary");
  classical->add_option("config", cfg_path)->required();
  add_overrides(classical, o);

  auto* quantum = app.add_subcommand("quantum-exact", "interacting Gibbs state per temperature");
  quantum->add_option("config", cfg_path)->required();
  add_overrides(quantum, o);

  auto* wick = app.add_subcommand("wick-check", "nested-cutoff Cauchy table for the interaction");
  wick->add_option("config", cfg_path)->required();
  add_overrides(wick, o);

  auto* report = app.add_subcommand("report", "recompute verdict.json from comparison.csv");
  report->add_option("dir", dir)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  bose2d::configure_workers();
  try {
    if (selftest->parsed()) {
      const auto checks = bose2d::run_selftest({fault});
      std::cout << bose2d::format_selftest(checks);
      std::size_t failed = 0;
      for (const auto& c : checks) failed += c.pass ? 0 : 1;
      std::cout << (failed ? std::to_string(failed) + " of " + std::to_string(checks.size()) + " checks failed"
                           : "all " + std::to_string(checks.size()) + " checks passed")
                << '\n';
      return failed ? kFail : kPass;
    }
    if (report->parsed()) {
      const auto v = bose2d::run_report(dir);
      print_verdict(v);
      return v.pass ? kPass : kFail;
    }
    const auto cfg = load(cfg_path, o);
    if (sweep->parsed()) {
      const auto result = bose2d::run_sweep(cfg, cfg.output);
      for (const auto& r : result.rows) {
        if (!r.ok) std::cerr << "T=" << r.temperature << ": " << r.diagnostic << '\n';
      }
      print_verdict(result.verdict);
      if (!result.verdict.rows_ok) return kNumerical;
      return result.verdict.pass ? kPass : kFail;
    }
    if (quantum->parsed()) {
      const auto rows = bose2d::run_quantum_exact(cfg, cfg.output);
      bool ok = true;
      for (const auto& r : rows) {
        if (r.ok) {
          std::cout << "T=" << r.temperature << " log_Z=" << r.log_z << " <N>=" << r.mean_particles << '\n';
        } else {
          std::cerr << "T=" << r.temperature << ": " << r.diagnostic << '\n';
          ok = false;
        }
      }
      return ok ? kPass : kNumerical;
    }
    if (classical->parsed()) {
      const auto side = bose2d::run_classical_sample(cfg, cfg.output);
      std::cout << "z=" << side.z.value << " +- " << side.z.standard_error << '\n';
      return kPass;
    }
    if (wick->parsed()) {
      const auto rep = bose2d::run_wick_check(cfg, cfg.output);
      bool decreasing = true;
      bool raw_grows = true;
      for (std::size_t l = 1; l < rep.gaps.size(); ++l) decreasing = decreasing && rep.gaps[l].decrease_z > 2.326;
      for (std::size_t l = 1; l < rep.levels.size(); ++l) {
        raw_grows = raw_grows && rep.levels[l].raw_mean.value > rep.levels[l - 1].raw_mean.value;
      }
      std::cout << (rep.all_nonnegative ? "PASS" : "FAIL") << " interaction nonnegative on every sample\n"
                << (decreasing ? "PASS" : "FAIL") << " consecutive L1 gaps decrease (99%)\n"
                << (raw_grows ? "PASS" : "FAIL") << " unsubtracted mean grows with the cutoff\n";
      return rep.all_nonnegative && decreasing && raw_grows ? kPass : kFail;
    }
  } catch (const bose2d::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const bose2d::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const bose2d::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const bose2d::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumerical;
  }
  return kUsage;
}
