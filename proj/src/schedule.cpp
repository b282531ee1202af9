#include "narendra/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace narendra {
namespace {

constexpr double kTrendSlack = 0.05;
constexpr double kArithmeticTol = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// Max of f(n) over [lo, hi], with the location.
template <class F>
std::pair<double, Eigen::Index> block_max(Eigen::Index lo, Eigen::Index hi, F&& f) {
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Index where = lo;
  for (Eigen::Index n = lo; n <= hi; ++n) {
    const double v = f(n);
    if (v > best) {
      best = v;
      where = n;
    }
  }
  return {best, where};
}

}  // namespace

double step_at(const StepFamily& family, Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("step index must be >= 1");
  const double g = std::visit(
      overloaded{
          [&](const Rational& r) {
            if (!(r.c > 0.0)) throw std::invalid_argument("Rational step family needs c > 0");
            return r.c / (r.c + static_cast<double>(n));
          },
          [&](const Power& p) {
            if (!(p.a > 0.0) || !(p.rho > 0.0) || p.rho > 1.0)
              throw std::invalid_argument("Power step family needs a > 0 and rho in (0,1]");
            if (!(p.cap > 0.0) || !(p.cap < 1.0))
              throw std::invalid_argument("Power step family needs cap in (0,1)");
            return std::min(p.a * std::pow(static_cast<double>(n), -p.rho), p.cap);
          },
          [&](const Scripted& s) {
            if (static_cast<std::size_t>(n) > s.values.size())
              throw HorizonOverrun("scripted step table has " + std::to_string(s.values.size()) +
                                   " entries, step " + std::to_string(n) + " requested");
            return s.values[static_cast<std::size_t>(n - 1)];
          },
      },
      family);
  if (!(g > 0.0 && g < 1.0))
    throw std::invalid_argument("step " + std::to_string(n) + " = " + std::to_string(g) +
                                " lies outside (0,1)");
  return g;
}

// Leaves headroom for S_n times bounded factors.
constexpr double kMaxS = 1e300;

PrefixTables build_prefix(const StepFamily& family, Eigen::Index n) {
  if (n < 0) throw std::invalid_argument("horizon must be >= 0");
  PrefixTables t;
  t.gamma.resize(n + 1);
  t.Gamma.resize(n + 1);
  t.S.resize(n + 1);
  t.Delta.resize(n + 1);
  t.sumsq.resize(n + 1);
  t.sumsq_corr.resize(n + 1);
  t.gamma(0) = 0.0;
  t.Gamma(0) = 0.0;
  t.S(0) = 1.0;
  t.Delta(0) = 1.0;
  t.sumsq(0) = 0.0;
  t.sumsq_corr(0) = 0.0;
  for (Eigen::Index k = 1; k <= n; ++k) {
    const double g = step_at(family, k);
    t.gamma(k) = g;
    t.Gamma(k) = t.Gamma(k - 1) + g;
    t.S(k) = t.S(k - 1) / (1.0 - g);
    if (!(t.S(k) <= kMaxS))
      throw std::range_error("S_n exceeds double range at n = " + std::to_string(k) +
                             "; shorten the horizon or slow the steps");
    t.Delta(k) = g * t.S(k);
    t.sumsq(k) = t.sumsq(k - 1) + g * g;
    t.sumsq_corr(k) = t.sumsq_corr(k - 1) + g * g / (1.0 - g);
  }
  return t;
}

ConditionReport check_monotone_steps(const PrefixTables& t) {
  const Eigen::Index N = t.horizon();
  ConditionReport r{"monotone_steps", static_cast<long>(N)};
  for (Eigen::Index n = 2; n <= N; ++n) {
    if (t.gamma(n) > t.gamma(n - 1)) {
      r.verdict = Verdict::fail;
      r.with("violation_index", static_cast<double>(n))
          .with("gamma_prev", t.gamma(n - 1))
          .with("gamma", t.gamma(n));
      return r;
    }
  }
  if (N < 4) {
    r.note = "horizon too short to judge partial-sum growth";
    return r;
  }
  // Divergent partial sums of a nonincreasing sequence do not lose
  // per-doubling increments; convergent ones do.
  const double last = t.Gamma(N) - t.Gamma(N / 2);
  const double prev = t.Gamma(N / 2) - t.Gamma(N / 4);
  const double growth = prev > 0.0 ? last / prev : 0.0;
  r.with("last_increment", last).with("prev_increment", prev).with("growth_ratio", growth);
  r.verdict = (last > 0.0 && growth >= 1.0 - kTrendSlack) ? Verdict::pass : Verdict::indeterminate;
  return r;
}

ConditionReport check_step_growth(const PrefixTables& t, double theta_b) {
  const Eigen::Index N = t.horizon();
  if (N < 16) throw std::invalid_argument("check_step_growth needs a horizon >= 16");
  if (!(theta_b > 0.0 && theta_b < 1.0)) throw std::invalid_argument("theta_b must lie in (0,1)");
  ConditionReport r{"step_growth", static_cast<long>(N)};
  // log of gamma_n / (Gamma_n exp(-theta_b Gamma_n)); avoids underflow for fast steps.
  auto log_ratio = [&](Eigen::Index n) {
    return std::log(t.gamma(n)) - std::log(t.Gamma(n)) + theta_b * t.Gamma(n);
  };
  const auto [m1, i1] = block_max(std::max<Eigen::Index>(3, N / 8), N / 4, log_ratio);
  const auto [m2, i2] = block_max(std::max<Eigen::Index>(3, N / 4), N / 2, log_ratio);
  const auto [m3, i3] = block_max(std::max<Eigen::Index>(3, N / 2), N, log_ratio);
  const double last_growth = std::exp(m3 - m2);
  const double prev_growth = std::exp(m2 - m1);
  r.with("earlier_block_max", std::exp(m1))
      .with("prev_block_max", std::exp(m2))
      .with("last_block_max", std::exp(m3))
      .with("last_block_argmax", static_cast<double>(i3))
      .with("prev_growth", prev_growth)
      .with("last_growth", last_growth);
  const double up = std::log1p(kTrendSlack);
  if (m3 - m2 <= up) {
    r.verdict = Verdict::pass;
  } else if (m3 - m2 >= std::log(2.0) || (m2 - m1 > up)) {
    // A doubling jump, or >5% growth over two consecutive doublings.
    r.verdict = Verdict::fail;
    r.with("violation_index", static_cast<double>(i3));
  } else {
    r.verdict = Verdict::indeterminate;
  }
  (void)i1;
  (void)i2;
  return r;
}

ConditionReport check_square_summable(const PrefixTables& t) {
  const Eigen::Index N = t.horizon();
  if (N < 2) throw std::invalid_argument("check_square_summable needs a horizon >= 2");
  ConditionReport r{"square_summable", static_cast<long>(N)};
  const double half = t.sumsq(N / 2);
  const double tail = t.sumsq(N) - half;
  r.with("tail_mass", tail).with("half_mass", half);
  if (tail <= kTrendSlack * half) {
    r.verdict = Verdict::pass;
  } else {
    r.verdict = Verdict::fail;
    r.with("violation_index", static_cast<double>(N));
  }
  return r;
}

ConditionReport check_sandwich(const PrefixTables& t) {
  const Eigen::Index N = t.horizon();
  ConditionReport r{"sandwich", static_cast<long>(N)};
  double worst = std::numeric_limits<double>::infinity();
  Eigen::Index worst_at = 0;
  Eigen::Index first_bad = 0;
  for (Eigen::Index n = 1; n <= N; ++n) {
    const double log_s = std::log(t.S(n));
    const double tol = kArithmeticTol * std::max(1.0, log_s);
    const double upper = log_s - t.Gamma(n);
    const double lower = t.Gamma(n) - (log_s - t.sumsq_corr(n));
    const double slack = std::min(upper, lower);
    if (slack < worst) {
      worst = slack;
      worst_at = n;
    }
    if (slack < -tol && first_bad == 0) first_bad = n;
  }
  r.with("worst_slack", N > 0 ? worst : 0.0).with("worst_index", static_cast<double>(worst_at));
  if (first_bad != 0) {
    r.verdict = Verdict::fail;
    r.with("violation_index", static_cast<double>(first_bad));
  } else {
    r.verdict = Verdict::pass;
  }
  return r;
}

ConditionReport check_step_caps(const PrefixTables& t, double theta_b) {
  const Eigen::Index N = t.horizon();
  if (N < 100) throw std::invalid_argument("check_step_caps needs a horizon >= 100");
  if (!(theta_b > 0.0)) throw std::invalid_argument("theta_b must be positive");
  ConditionReport r{"step_caps", static_cast<long>(N)};
  const Eigen::Index lo = std::max<Eigen::Index>(3, N / 2);
  const auto [step_cap, step_at_n] = block_max(lo, N, [&](Eigen::Index n) {
    return t.gamma(n) * static_cast<double>(n) / std::log(static_cast<double>(n));
  });
  const auto [sum_cap, sum_at_n] = block_max(lo, N, [&](Eigen::Index n) {
    return t.Gamma(n) / std::log(static_cast<double>(n));
  });
  const double bound = (1.0 / theta_b) * (1.0 + kTrendSlack);
  r.with("step_ratio_max", step_cap)
      .with("sum_ratio_max", sum_cap)
      .with("bound", bound);
  if (step_cap <= bound && sum_cap <= bound) {
    r.verdict = Verdict::pass;
  } else {
    r.verdict = Verdict::fail;
    r.with("violation_index", static_cast<double>(step_cap > bound ? step_at_n : sum_at_n));
  }
  return r;
}

}  // namespace narendra
