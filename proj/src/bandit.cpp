#include "narendra/bandit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace narendra {
namespace {

constexpr double kBrakeTolerance = 1e-10;
constexpr double kMonotoneTolerance = 1e-12;

bool sf_step_ok(double s_prev, double x_prev, double s, double x, double gamma) {
  return s * f(x) >= s_prev * f(x_prev) - kMonotoneTolerance * s &&
         f(x) >= (1.0 - gamma) * f(x_prev) - kMonotoneTolerance;
}

StepWindow make_window(long first, long last) {
  StepWindow w;
  w.first = first;
  const auto states = static_cast<std::size_t>(last - first + 1);
  w.x.reserve(states);
  w.lambda.reserve(states);
  w.sum_gf.reserve(states);
  w.s_b.reserve(states);
  w.uniform.reserve(states - 1);
  w.played_a.reserve(states - 1);
  w.eta_a.reserve(states - 1);
  w.eta_b.reserve(states - 1);
  return w;
}

}  // namespace

StepTrace step_with_uniform(BanditState& state, double gamma, double uniform, Bit eta_a,
                            Bit eta_b) {
  const double x_prev = state.x;
  const Arm played = uniform <= x_prev ? Arm::A : Arm::B;
  if (played == Arm::A && eta_a == 1) {
    state.x = x_prev + gamma * (1.0 - x_prev);
  } else if (played == Arm::B && eta_b == 1) {
    state.x = (1.0 - gamma) * x_prev;
  }
  ++state.n;
  return {state.n, uniform, played, eta_a, eta_b, x_prev, state.x};
}

StepTrace step(BanditState& state, double gamma, Bit eta_a, Bit eta_b) {
  return step_with_uniform(state, gamma, state.uniforms.uniform(), eta_a, eta_b);
}

double martingale_increment(double x, Arm played, Bit eta_a, Bit eta_b) {
  const double play_a = played == Arm::A ? 1.0 : 0.0;
  const double play_b = 1.0 - play_a;
  return eta_a * (1.0 - x) * (play_a - x) + eta_b * x * ((1.0 - x) - play_b);
}

double branch_weighted_mean(double x, Bit eta_a, Bit eta_b) {
  return x * martingale_increment(x, Arm::A, eta_a, eta_b) +
         (1.0 - x) * martingale_increment(x, Arm::B, eta_a, eta_b);
}

double branch_second_moment(double x, Bit eta_a, Bit eta_b) {
  const double ea = martingale_increment(x, Arm::A, eta_a, eta_b);
  const double eb = martingale_increment(x, Arm::B, eta_a, eta_b);
  return x * ea * ea + (1.0 - x) * eb * eb;
}

double decompose_step(Decomposition& d, const StepTrace& t, double gamma, double theta_a,
                      double theta_b) {
  const double gap = theta_a - theta_b;
  const double gf = gamma * f(t.x_prev);
  d.M += gamma * martingale_increment(t.x_prev, t.played, t.eta_a, t.eta_b);
  d.Lambda += gf * (static_cast<double>(t.eta_a) - static_cast<double>(t.eta_b) - gap);
  d.drift += gap * gf;
  d.sum_gf += gf;
  const double residual = std::abs(t.x - d.reconstruct());
  if (!(residual <= kIdentityTolerance))
    throw ConsistencyError("decomposition identity violated at step " + std::to_string(t.n) +
                           ": residual " + std::to_string(residual));
  return residual;
}

void brake_step(BrakeDiagnostics& diag, const StepTrace& t, double gamma, double Gamma_n,
                double theta_b) {
  if (t.played == Arm::B && t.eta_b == 1) diag.S_B /= (1.0 - gamma);
  if (t.played == Arm::A && t.eta_a == 1) diag.Y_B += gamma * diag.S_B * (1.0 - t.x_prev);
  const double direct = diag.S_B * t.x;
  if (!(std::abs(diag.Y_B - direct) <= kBrakeTolerance * std::max(1.0, std::abs(diag.Y_B))))
    throw ConsistencyError("brake update out of step with S_B X at step " + std::to_string(t.n));
  diag.log_T_B = theta_b * Gamma_n;
  diag.T_B = std::exp(diag.log_T_B);
}

Eigen::VectorXd mean_field_trajectory(const MeanFieldConfig& c, const PrefixTables& tables,
                                      long n) {
  if (n < 1) throw std::invalid_argument("mean-field horizon must be >= 1");
  if (n > tables.horizon()) throw HorizonOverrun("mean-field horizon exceeds the step table");
  Eigen::VectorXd x(n + 1);
  x(0) = c.x0;
  const double gap = c.theta_a - c.theta_b;
  for (long k = 1; k <= n; ++k) x(k) = x(k - 1) + tables.gamma(k) * gap * f(x(k - 1));
  return x;
}

RunRecord run(BanditConfig cfg) {
  if (!cfg.tables) throw std::invalid_argument("run needs step tables");
  const PrefixTables& t = *cfg.tables;
  const long N = cfg.horizon;
  if (N < 0) throw std::invalid_argument("horizon must be >= 0");
  if (N > t.horizon()) throw HorizonOverrun("horizon exceeds the step table");
  if (!(cfg.x0 > 0.0 && cfg.x0 < 1.0)) throw std::invalid_argument("x0 must lie in (0,1)");

  const RunOptions& opt = cfg.options;
  const long stride = opt.sample_stride > 0 ? opt.sample_stride : std::max<long>(1, (N + 9999) / 10000);
  const long ratio_stride = opt.ratio_log_stride > 0 ? opt.ratio_log_stride : stride;

  RunRecord rec;
  rec.horizon = N;
  rec.x0 = cfg.x0;
  rec.theta_a = cfg.arm_a.nominal_mean();
  rec.theta_b = cfg.arm_b.nominal_mean();
  rec.decomposition.x0 = cfg.x0;
  rec.brake.Y_B = cfg.x0;
  rec.deviations = DeviationTracker(rec.theta_a, rec.theta_b);
  if (opt.keep_streams) {
    rec.stream_a.reserve(static_cast<std::size_t>(N));
    rec.stream_b.reserve(static_cast<std::size_t>(N));
  }

  // Window bookkeeping: (first, last) pairs.
  std::vector<std::pair<long, long>> spans;
  if (opt.dense_prefix > 0) spans.emplace_back(0, std::min(opt.dense_prefix, N));
  if (opt.mid_window > 0 && N > 0) {
    const long first = std::max<long>(0, N / 2 - opt.mid_window / 2);
    spans.emplace_back(first, std::min(N, first + opt.mid_window));
  }
  for (auto [a, b] : spans) rec.windows.push_back(make_window(a, b));

  BanditState state{0, cfg.x0, Rng(cfg.uniform_seed)};
  InvariantSummary& inv = rec.invariants;
  const double theta_b = rec.theta_b;

  auto log_state = [&](long n) {
    for (std::size_t w = 0; w < spans.size(); ++w) {
      if (n < spans[w].first || n > spans[w].second) continue;
      StepWindow& win = rec.windows[w];
      win.x.push_back(state.x);
      win.lambda.push_back(rec.decomposition.Lambda);
      win.sum_gf.push_back(rec.decomposition.sum_gf);
      win.s_b.push_back(rec.brake.S_B);
    }
    if (n <= opt.dense_prefix || n % stride == 0 || n == N) {
      const Decomposition& d = rec.decomposition;
      const BrakeDiagnostics& b = rec.brake;
      rec.trajectory.push_back({n, state.x, d.M, d.Lambda, d.drift, t.S(n), b.S_B, b.Y_B, b.T_B,
                                rec.deviations.R()});
    }
    if (n % ratio_stride == 0 || n == N) {
      const double log_sb = std::log(rec.brake.S_B);
      rec.ratio_log.push_back({n,
                               log_sb > 0.0 ? state.x * rec.brake.S_B / log_sb
                                            : std::numeric_limits<double>::quiet_NaN(),
                               rec.brake.S_B / rec.brake.T_B});
    }
  };

  inv.brake_ratio_first_half = 1.0;  // S_0^B / T_0^B
  log_state(0);

  for (long n = 1; n <= N; ++n) {
    const double gamma = t.gamma(n);
    const auto [ea, eb] = next_pair(cfg.arm_a, cfg.arm_b, rec.deviations);
    if (opt.keep_streams) {
      rec.stream_a.push_back(ea);
      rec.stream_b.push_back(eb);
    }
    const StepTrace tr = step(state, gamma, ea, eb);
    inv.worst_decomposition_residual =
        std::max(inv.worst_decomposition_residual, decompose_step(rec.decomposition, tr, gamma, rec.theta_a, theta_b));
    brake_step(rec.brake, tr, gamma, t.Gamma(n), theta_b);

    inv.worst_branch_mean = std::max(inv.worst_branch_mean, std::abs(branch_weighted_mean(tr.x_prev, ea, eb)));
    inv.worst_second_moment_excess =
        std::max(inv.worst_second_moment_excess, branch_second_moment(tr.x_prev, ea, eb) - f(tr.x_prev));
    inv.min_yb_minus_x0 = std::min(inv.min_yb_minus_x0, rec.brake.Y_B - cfg.x0);
    if (!(tr.x >= 0.0 && tr.x <= 1.0)) inv.x_in_unit_interval = false;
    if (rec.brake.S_B > t.S(n)) inv.sb_le_s = false;
    inv.worst_lower_bound_excess =
        std::max({inv.worst_lower_bound_excess, (cfg.x0 / t.S(n) - tr.x) / tr.x,
                  (cfg.x0 / rec.brake.S_B - tr.x) / tr.x});
    if (!sf_step_ok(t.S(n - 1), tr.x_prev, t.S(n), tr.x, gamma)) ++inv.sf_violations;

    const double ratio = rec.brake.S_B / rec.brake.T_B;
    if (n <= N / 2) {
      inv.brake_ratio_first_half = std::max(inv.brake_ratio_first_half, ratio);
    } else {
      inv.brake_ratio_second_half = std::max(inv.brake_ratio_second_half, ratio);
    }

    for (std::size_t w = 0; w < spans.size(); ++w) {
      if (n <= spans[w].first || n > spans[w].second) continue;
      StepWindow& win = rec.windows[w];
      win.uniform.push_back(tr.uniform);
      win.played_a.push_back(tr.played == Arm::A ? 1 : 0);
      win.eta_a.push_back(ea);
      win.eta_b.push_back(eb);
    }
    log_state(n);
  }

  if (N >= 2)
    inv.brake_trend = inv.brake_ratio_second_half <= 1.1 * inv.brake_ratio_first_half ? Verdict::pass
                                                                               : Verdict::indeterminate;
  rec.x_final = state.x;
  return rec;
}

ConditionReport check_sf_monotone(const StepWindow& w, const PrefixTables& t) {
  ConditionReport r{"sf_monotone", w.last()};
  long violations = 0;
  long first_bad = -1;
  double worst = std::numeric_limits<double>::infinity();
  for (long k = w.first + 1; k <= w.last(); ++k) {
    const double lhs = t.S(k) * f(w.x_at(k));
    const double rhs = t.S(k - 1) * f(w.x_at(k - 1));
    worst = std::min(worst, (lhs - rhs) / t.S(k));
    if (!sf_step_ok(t.S(k - 1), w.x_at(k - 1), t.S(k), w.x_at(k), t.gamma(k))) {
      ++violations;
      if (first_bad < 0) first_bad = k;
    }
  }
  r.with("window_first", static_cast<double>(w.first))
      .with("window_last", static_cast<double>(w.last()))
      .with("violations", static_cast<double>(violations))
      .with("worst_margin", w.last() > w.first ? worst : 0.0);
  if (violations == 0) {
    r.verdict = Verdict::pass;
  } else {
    r.verdict = Verdict::fail;
    r.with("violation_index", static_cast<double>(first_bad));
  }
  return r;
}

}  // namespace narendra
