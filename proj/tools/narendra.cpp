#include <chrono>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "narendra/config.hpp"
#include "narendra/harness.hpp"
#include "narendra/io.hpp"

namespace {

using namespace narendra;
namespace fs = std::filesystem;

enum Exit : int { kOk = 0, kConfig = 2, kConsistency = 3, kVerdictFail = 4 };

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> threads;
  bool strict = false;
};

// --out beats NARENDRA_OUTPUT_DIR beats output_dir in the config.
fs::path output_dir(const Flags& flags, const ExperimentConfig& c) {
  if (flags.out) return *flags.out;
  if (const char* env = std::getenv("NARENDRA_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

ExperimentConfig load(const Flags& flags) {
  ExperimentConfig c = load_config(flags.config);
  if (flags.seed) c.seed = *flags.seed;
  if (flags.threads) {
    if (*flags.threads < 1) throw ConfigError("--threads must be >= 1");
    c.threads = *flags.threads;
  }
  return c;
}

int cmd_run(const Flags& flags) {
  const ExperimentConfig c = load(flags);
  const fs::path dir = output_dir(flags, c);
  const RunReport rep = run_with_checks(c);
  const std::string hash = config_hash(c);
  write_file(dir / "trajectory.csv", trajectory_csv(rep.record.trajectory));
  write_file(dir / "report.json", run_report_json(rep, hash).dump(2) + "\n");
  std::cout << "X_N = " << format_double(rep.record.x_final) << "\n";
  return flags.strict && any_fail(rep.checks) ? kVerdictFail : kOk;
}

int cmd_sweep(const Flags& flags) {
  const ExperimentConfig c = load(flags);
  const fs::path dir = output_dir(flags, c);
  const auto start = std::chrono::steady_clock::now();
  const SweepSummary s = aggregate(run_sweep(c, c.threads), c.thresholds, config_hash(c));
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(dir / "summary.json", to_json(s).dump(2) + "\n");
  write_file(dir / "finals.csv", finals_csv(s.outcomes));
  // Wall time lives apart from the summary so that summary bytes stay reproducible.
  write_file(dir / "timing.json",
             nlohmann::json{{"schema_version", kSchemaVersion}, {"wall_seconds", seconds}, {"threads", c.threads}}.dump(2) +
                 "\n");
  std::cout << "fraction_hi = " << format_double(s.fraction_hi) << ", fraction_lo = " << format_double(s.fraction_lo)
            << ", errored = " << s.errored << "\n";
  const bool failed = s.decomposition.fail + s.brake_bounds.fail + s.sf_monotone.fail + s.brake_trend.fail > 0;
  return flags.strict && failed ? kVerdictFail : kOk;
}

int cmd_check(const Flags& flags) {
  const ExperimentConfig c = load(flags);
  const fs::path dir = output_dir(flags, c);
  const auto reports = static_checks(c);
  write_file(dir / "checks.json", reports_json(reports, config_hash(c)).dump(2) + "\n");
  for (const auto& r : reports) std::cout << r.condition_name << ": " << to_string(r.verdict) << "\n";
  return flags.strict && any_fail(reports) ? kVerdictFail : kOk;
}

int cmd_mean_field(const Flags& flags) {
  const ExperimentConfig c = load(flags);
  const fs::path dir = output_dir(flags, c);
  const auto tables = shared_tables(c);
  const auto x = mean_field_trajectory({c.arm_a.theta, c.arm_b.theta, c.x0}, *tables, c.horizon);
  write_file(dir / "mean_field.csv", mean_field_csv(x));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-armed bandit simulation and verification toolkit"};
  app.require_subcommand(1);
  Flags flags;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "experiment config (JSON)")->required();
    sub->add_option("--seed", flags.seed, "override the master seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--threads", flags.threads, "worker threads");
    sub->add_flag("--strict", flags.strict, "exit 4 on any fail verdict");
  };
  auto* run = app.add_subcommand("run", "simulate one replica and verify it");
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over replicas");
  auto* check = app.add_subcommand("check", "verify step and payoff conditions without the bandit");
  auto* mean_field = app.add_subcommand("mean-field", "deterministic mean-field trajectory");
  for (auto* sub : {run, sweep, check, mean_field}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }

  try {
    if (run->parsed()) return cmd_run(flags);
    if (sweep->parsed()) return cmd_sweep(flags);
    if (check->parsed()) return cmd_check(flags);
    return cmd_mean_field(flags);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const HorizonOverrun& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency error: " << e.what() << "\n";
    return kConsistency;
  } catch (const std::range_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
}
