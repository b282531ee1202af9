#include "narendra/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "narendra/bounds.hpp"
#include "narendra/rng.hpp"

namespace narendra {
namespace {

constexpr std::size_t kPairsPerCheck = 10000;
constexpr long kDenseWindow = 10000;

ConditionReport not_run(std::string name, long horizon, const std::string& why) {
  ConditionReport r{std::move(name), horizon};
  r.verdict = Verdict::indeterminate;
  r.note = "precondition not met: " + why;
  return r;
}

// Runs a verifier; an unmet precondition becomes an indeterminate report.
void attempt(std::vector<ConditionReport>& out, const std::string& name, long horizon,
             const std::function<ConditionReport()>& verifier) {
  try {
    out.push_back(verifier());
  } catch (const std::invalid_argument& e) {
    out.push_back(not_run(name, horizon, e.what()));
  } catch (const HorizonOverrun& e) {
    out.push_back(not_run(name, horizon, e.what()));
  }
}

std::vector<Bit> draw_stream(PayoffSource source, long n) {
  std::vector<Bit> bits(static_cast<std::size_t>(n));
  for (auto& b : bits) b = source.next_bit();
  return bits;
}

// Verifiers over a pair of payoff streams of length N.
void stream_checks(std::vector<ConditionReport>& out, const ExperimentConfig& c, const PrefixTables& t,
                   std::span<const Bit> bits_a, std::span<const Bit> bits_b, std::uint64_t pair_seed) {
  const long N = static_cast<long>(bits_a.size());
  const RateEnvelope env = make_envelope(c.envelope);
  DeviationTracker tracker(c.arm_a.theta, c.arm_b.theta);
  for (long k = 0; k < N; ++k) tracker.record(bits_a[static_cast<std::size_t>(k)], bits_b[static_cast<std::size_t>(k)]);
  const DeviationStats stats = deviation_stats(tracker, env, N);

  attempt(out, "deviation_envelope", N, [&] { return check_deviation_envelope(stats); });

  const long lo = std::max<long>(env.k0(), stats.first_index);
  for (WeightKind kind : {WeightKind::gamma, WeightKind::gamma_over_Gamma}) {
    for (Arm arm : {Arm::A, Arm::B}) {
      const std::string suffix = std::string(to_string(kind)) + (arm == Arm::A ? "_A" : "_B");
      const auto bits = arm == Arm::A ? bits_a : bits_b;
      const double theta = arm == Arm::A ? c.arm_a.theta : c.arm_b.theta;
      std::optional<WeightedDeviation> dev;
      try {
        dev = phi_dev(kind, arm, bits, theta, t, N);
      } catch (const std::invalid_argument& e) {
        out.push_back(not_run("abel_bound_" + suffix, N, e.what()));
        continue;
      }
      attempt(out, "abel_bound_" + suffix, N, [&] {
        const auto pairs = sample_pairs(lo, N / 2, kPairsPerCheck, pair_seed);
        return abel_bound_verify(*dev, env, stats, pairs);
      });
      attempt(out, "abel_cauchy_" + suffix, N, [&] { return abel_cauchy_verify(*dev); });
    }
  }
  attempt(out, "psi_bound", N, [&] {
    const PsiTable p = psi(bits_a, bits_b, c.arm_a.theta, c.arm_b.theta, t, N);
    return psi_bound_verify(p, env, stats, t);
  });
}

std::uint64_t pair_seed(const ExperimentConfig& c) {
  return substream_seed(derive_seed(c.seed, 0), Substream::uniform) ^ 0x5bd1e995ULL;
}

}  // namespace

std::shared_ptr<const PrefixTables> shared_tables(const ExperimentConfig& c) {
  try {
    return std::make_shared<const PrefixTables>(build_prefix(c.schedule, c.horizon + 1));
  } catch (const HorizonOverrun&) {
    // A scripted schedule may stop exactly at N.
    return std::make_shared<const PrefixTables>(build_prefix(c.schedule, c.horizon));
  }
}

BanditConfig replica_config(const ExperimentConfig& c, std::shared_ptr<const PrefixTables> tables,
                            long index, RunOptions options) {
  const std::uint64_t seed = derive_seed(c.seed, static_cast<std::uint64_t>(index));
  if (options.sample_stride == 0) options.sample_stride = c.sample_stride;
  return BanditConfig{std::move(tables),
                      make_source(c.arm_a, substream_seed(seed, Substream::arm_a)),
                      make_source(c.arm_b, substream_seed(seed, Substream::arm_b)),
                      c.x0,
                      c.horizon,
                      substream_seed(seed, Substream::uniform),
                      options};
}

void VerdictCount::add(Verdict v) {
  switch (v) {
    case Verdict::pass: ++pass; break;
    case Verdict::fail: ++fail; break;
    case Verdict::indeterminate: ++indeterminate; break;
  }
}

ReplicaOutcome run_replica(const ExperimentConfig& c, const std::shared_ptr<const PrefixTables>& tables,
                           long index) {
  ReplicaOutcome o;
  o.index = index;
  o.seed = derive_seed(c.seed, static_cast<std::uint64_t>(index));
  RunOptions opt;
  opt.dense_prefix = 0;
  opt.sample_stride = std::max<long>(1, c.horizon);
  try {
    const RunRecord rec = run(replica_config(c, tables, index, opt));
    const InvariantSummary& inv = rec.invariants;
    o.x_final = rec.x_final;
    o.worst_decomposition_residual = inv.worst_decomposition_residual;
    o.decomposition = inv.worst_decomposition_residual <= kIdentityTolerance ? Verdict::pass : Verdict::fail;
    o.brake_bounds = inv.min_yb_minus_x0 >= 0.0 && inv.sb_le_s && inv.x_in_unit_interval ? Verdict::pass
                                                                                         : Verdict::fail;
    o.sf_monotone = inv.sf_violations == 0 ? Verdict::pass : Verdict::fail;
    o.brake_trend = inv.brake_trend;
  } catch (const ConsistencyError& e) {
    o.error = std::string("consistency: ") + e.what();
  } catch (const HorizonOverrun& e) {
    o.error = std::string("horizon: ") + e.what();
  }
  return o;
}

std::vector<ReplicaOutcome> run_sweep(const ExperimentConfig& c, int threads) {
  const auto tables = shared_tables(c);
  std::vector<ReplicaOutcome> results(static_cast<std::size_t>(c.replicas));
  std::atomic<long> next{0};
  auto worker = [&] {
    for (long i = next++; i < c.replicas; i = next++) results[static_cast<std::size_t>(i)] = run_replica(c, tables, i);
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(c.replicas)));
  std::vector<std::jthread> pool;
  for (int k = 1; k < n; ++k) pool.emplace_back(worker);
  worker();
  return results;
}

double quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw std::invalid_argument("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  return sorted[lo] + w * (sorted[hi] - sorted[lo]);
}

SweepSummary aggregate(std::vector<ReplicaOutcome> outcomes, const Thresholds& th, std::string hash) {
  if (outcomes.empty()) throw std::invalid_argument("aggregate needs at least one replica");
  std::sort(outcomes.begin(), outcomes.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
  for (std::size_t i = 1; i < outcomes.size(); ++i)
    if (outcomes[i].index == outcomes[i - 1].index) throw std::invalid_argument("duplicate replica index");

  SweepSummary s;
  s.config_hash = std::move(hash);
  s.thresholds = th;
  s.replicas = static_cast<long>(outcomes.size());
  std::vector<double> finals;
  for (const auto& o : outcomes) {
    if (o.error) {
      ++s.errored;
      continue;
    }
    finals.push_back(o.x_final);
    if (o.x_final > th.hi) ++s.count_hi;
    if (o.x_final < th.lo) ++s.count_lo;
    s.decomposition.add(o.decomposition);
    s.brake_bounds.add(o.brake_bounds);
    s.sf_monotone.add(o.sf_monotone);
    s.brake_trend.add(o.brake_trend);
  }
  s.completed = static_cast<long>(finals.size());
  if (s.completed == 0) throw ConsistencyError("every replica errored");
  const double n = static_cast<double>(s.completed);
  s.fraction_hi = static_cast<double>(s.count_hi) / n;
  s.fraction_lo = static_cast<double>(s.count_lo) / n;
  s.fraction_mid = static_cast<double>(s.completed - s.count_hi - s.count_lo) / n;
  std::sort(finals.begin(), finals.end());
  s.quantiles = {quantile(finals, 0.0),  quantile(finals, 0.05), quantile(finals, 0.25),
                 quantile(finals, 0.5),  quantile(finals, 0.75), quantile(finals, 0.95),
                 quantile(finals, 1.0)};
  s.outcomes = std::move(outcomes);
  return s;
}

std::vector<ConditionReport> static_checks(const ExperimentConfig& c) {
  std::vector<ConditionReport> out;
  const long N = c.horizon;
  const auto tables = shared_tables(c);
  const PrefixTables prefix = build_prefix(c.schedule, N);
  const double theta_b = c.arm_b.theta;

  attempt(out, "monotone_steps", N, [&] { return check_monotone_steps(prefix); });
  attempt(out, "step_growth", N, [&] { return check_step_growth(prefix, theta_b); });
  attempt(out, "square_summable", N, [&] { return check_square_summable(prefix); });
  attempt(out, "sandwich", N, [&] { return check_sandwich(prefix); });
  attempt(out, "step_caps", N, [&] { return check_step_caps(prefix, theta_b); });
  attempt(out, "gamma_tail_bound", N, [&] { return gamma_tail_bound_verify(prefix, theta_b); });

  for (const auto* arm : {&c.arm_a, &c.arm_b}) {
    const std::string name = arm == &c.arm_a ? "stationary_mean_A" : "stationary_mean_B";
    ConditionReport r{name, N};
    if (arm->kind == SourceSpec::Kind::markov) {
      r.with("theta", arm->theta).with("states", static_cast<double>(arm->matrix.rows()));
      r.verdict = Verdict::pass;
    } else {
      r.with("theta", arm->theta);
      r.verdict = Verdict::indeterminate;
      r.note = "declared mean; not a Markov source";
    }
    out.push_back(std::move(r));
  }

  try {
    const std::uint64_t seed = derive_seed(c.seed, 0);
    const auto bits_a = draw_stream(make_source(c.arm_a, substream_seed(seed, Substream::arm_a)), N);
    const auto bits_b = draw_stream(make_source(c.arm_b, substream_seed(seed, Substream::arm_b)), N);
    stream_checks(out, c, *tables, bits_a, bits_b, pair_seed(c));
  } catch (const HorizonOverrun& e) {
    out.push_back(not_run("payoff_streams", N, e.what()));
  }
  return out;
}

RunReport run_with_checks(const ExperimentConfig& c) {
  const long N = c.horizon;
  const auto tables = shared_tables(c);
  RunOptions opt;
  opt.keep_streams = true;
  opt.dense_prefix = std::min(N, kDenseWindow);
  RunReport rep{run(replica_config(c, tables, 0, opt)), {}};
  const RunRecord& rec = rep.record;
  const InvariantSummary& inv = rec.invariants;
  auto& out = rep.checks;

  {
    ConditionReport r{"decomposition_identity", N};
    r.with("worst_residual", inv.worst_decomposition_residual).with("tolerance", kIdentityTolerance);
    r.verdict = inv.worst_decomposition_residual <= kIdentityTolerance ? Verdict::pass : Verdict::fail;
    out.push_back(std::move(r));
  }
  {
    ConditionReport r{"martingale_step", N};
    r.with("worst_branch_mean", inv.worst_branch_mean)
        .with("worst_second_moment_excess", inv.worst_second_moment_excess);
    r.verdict = inv.worst_branch_mean <= 1e-12 && inv.worst_second_moment_excess <= 1e-12 ? Verdict::pass
                                                                                            : Verdict::fail;
    out.push_back(std::move(r));
  }
  {
    ConditionReport r{"brake_bounds", N};
    r.with("min_yb_minus_x0", inv.min_yb_minus_x0)
        .with("sb_le_s", inv.sb_le_s ? 1.0 : 0.0)
        .with("x_in_unit_interval", inv.x_in_unit_interval ? 1.0 : 0.0)
        .with("worst_lower_bound_excess", inv.worst_lower_bound_excess)
        .with("sf_violations", static_cast<double>(inv.sf_violations));
    r.verdict = inv.min_yb_minus_x0 >= 0.0 && inv.sb_le_s && inv.x_in_unit_interval && inv.sf_violations == 0
                    ? Verdict::pass
                    : Verdict::fail;
    out.push_back(std::move(r));
  }
  {
    ConditionReport r{"brake_trend", N};
    r.with("first_half_max", inv.brake_ratio_first_half).with("second_half_max", inv.brake_ratio_second_half);
    r.verdict = inv.brake_trend;
    out.push_back(std::move(r));
  }

  if (!rec.windows.empty() && rec.windows.front().last() > 0) {
    const StepWindow& w = rec.windows.front();
    out.push_back(check_sf_monotone(w, *tables));
    out.push_back(brake_mass_verify(w, *tables, rec.theta_b));
    const RateEnvelope env = make_envelope(c.envelope);
    attempt(out, "psi_identity", N, [&] {
      const PsiTable p = psi(rec.stream_a, rec.stream_b, rec.theta_a, rec.theta_b, *tables, N);
      return psi_identity_verify(w, p, *tables);
    });
    attempt(out, "lambda_increment", N, [&] {
      const DeviationStats stats = deviation_stats(rec.deviations, env, N);
      const RPrimeTable rp = r_prime(stats, env, *tables);
      const auto pairs = sample_pairs(rp.first, std::min(w.last(), N / 2), kPairsPerCheck, pair_seed(c));
      return lambda_increment_verify(w, rp, pairs);
    });
  }
  stream_checks(out, c, *tables, rec.stream_a, rec.stream_b, pair_seed(c));
  return rep;
}

bool any_fail(const std::vector<ConditionReport>& reports) {
  return std::any_of(reports.begin(), reports.end(), [](const auto& r) { return r.verdict == Verdict::fail; });
}

}  // namespace narendra
