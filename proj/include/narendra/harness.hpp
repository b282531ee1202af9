#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "narendra/bandit.hpp"
#include "narendra/config.hpp"
#include "narendra/report.hpp"

namespace narendra {

inline constexpr int kSchemaVersion = 1;

/// Step tables reaching N + 1, shared read-only by every replica.
std::shared_ptr<const PrefixTables> shared_tables(const ExperimentConfig& config);

/// Replica `index` of an experiment: seeds, sources and tables wired together.
/// The uniform stream and each arm draw from separate sub-streams of
/// derive_seed(config.seed, index).
BanditConfig replica_config(const ExperimentConfig& config,
                            std::shared_ptr<const PrefixTables> tables, long index,
                            RunOptions options = {});

struct VerdictCount {
  long pass = 0;
  long fail = 0;
  long indeterminate = 0;

  void add(Verdict v);
};

struct ReplicaOutcome {
  long index = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> error;  // set iff the replica errored
  double x_final = 0.0;
  double worst_decomposition_residual = 0.0;
  Verdict decomposition = Verdict::indeterminate;
  Verdict brake_bounds = Verdict::indeterminate;
  Verdict sf_monotone = Verdict::indeterminate;
  Verdict brake_trend = Verdict::indeterminate;
};

/// Runs one replica and reduces it to its outcome. Consistency errors and
/// horizon overruns are captured in `error`.
ReplicaOutcome run_replica(const ExperimentConfig& config,
                           const std::shared_ptr<const PrefixTables>& tables, long index);

/// All replicas on a pool of `threads` workers; results are indexed by
/// replica, so the output does not depend on scheduling.
std::vector<ReplicaOutcome> run_sweep(const ExperimentConfig& config, int threads);

struct Quantiles {
  double q00, q05, q25, q50, q75, q95, q100;
};

struct SweepSummary {
  int schema_version = kSchemaVersion;
  std::string config_hash;
  long replicas = 0;
  long errored = 0;
  long completed = 0;
  Thresholds thresholds;
  long count_hi = 0;
  long count_lo = 0;
  double fraction_hi = 0.0;  // over completed replicas
  double fraction_lo = 0.0;
  double fraction_mid = 0.0;
  Quantiles quantiles{};
  VerdictCount decomposition, brake_bounds, sf_monotone, brake_trend;
  std::vector<ReplicaOutcome> outcomes;  // sorted by index
};

/// Merges outcomes keyed by replica index. Throws ConsistencyError when
/// every replica errored, std::invalid_argument on an empty or duplicated set.
SweepSummary aggregate(std::vector<ReplicaOutcome> outcomes, const Thresholds& thresholds,
                       std::string config_hash);

/// Linear-interpolated quantile of sorted data.
double quantile(const std::vector<double>& sorted, double q);

/// Verifiers that need no simulation: step conditions, stationary means and
/// the deviation envelope of each arm's stream. Failed preconditions are
/// reported as indeterminate with a note.
std::vector<ConditionReport> static_checks(const ExperimentConfig& config);

/// Verifiers over one simulated run (replica 0 of the config).
struct RunReport {
  RunRecord record;
  std::vector<ConditionReport> checks;
};

RunReport run_with_checks(const ExperimentConfig& config);

bool any_fail(const std::vector<ConditionReport>& reports);

}  // namespace narendra
