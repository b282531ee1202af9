#include "narendra/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "narendra/rng.hpp"

namespace narendra {
namespace {

constexpr double kInequalitySlack = 1e-12;
constexpr double kIdentityTol = 1e-10;

struct Tally {
  long checked = 0;
  long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  IndexPair first_bad{-1, -1};

  void add(double margin, IndexPair where) {
    ++checked;
    worst_margin = std::min(worst_margin, margin);
    if (margin < 0.0) {
      if (violations == 0) first_bad = where;
      ++violations;
    }
  }

  void finish(ConditionReport& r) const {
    r.with("checked", static_cast<double>(checked))
        .with("violations", static_cast<double>(violations))
        .with("worst_margin", checked > 0 ? worst_margin : 0.0);
    if (violations == 0) {
      r.verdict = Verdict::pass;
    } else {
      r.verdict = Verdict::fail;
      r.with("violation_m", static_cast<double>(first_bad.m))
          .with("violation_index", static_cast<double>(first_bad.n));
    }
  }
};

}  // namespace

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::gamma:
      return "gamma";
    case WeightKind::gamma_over_Gamma:
      return "gamma_over_Gamma";
    case WeightKind::gamma_over_S_lag:
      return "gamma_over_S_lag";
  }
  return "gamma";
}

Eigen::VectorXd weights(WeightKind kind, const PrefixTables& t, long n) {
  if (n > t.horizon()) throw HorizonOverrun("weights requested past the step table");
  Eigen::VectorXd xi = Eigen::VectorXd::Zero(n + 1);
  for (long k = 1; k <= n; ++k) {
    switch (kind) {
      case WeightKind::gamma:
        xi(k) = t.gamma(k);
        break;
      case WeightKind::gamma_over_Gamma:
        xi(k) = t.gamma(k) / t.Gamma(k);
        break;
      case WeightKind::gamma_over_S_lag:
        xi(k) = t.gamma(k) / t.S(k - 1);
        break;
    }
  }
  return xi;
}

WeightedDeviation phi_dev(WeightKind kind, Arm arm, std::span<const Bit> bits, double theta,
                          const PrefixTables& t, long n) {
  if (n < 0 || static_cast<std::size_t>(n) > bits.size())
    throw HorizonOverrun("payoff stream shorter than the requested horizon");
  WeightedDeviation d{kind, arm, theta, weights(kind, t, n), Eigen::VectorXd::Zero(n + 1)};
  for (long k = 2; k <= n; ++k)
    if (d.xi(k) > d.xi(k - 1))
      throw std::invalid_argument("weights increase at k = " + std::to_string(k) +
                                  "; the Abel bound needs a nonincreasing sequence");
  for (long k = 1; k <= n; ++k)
    d.values(k) = d.values(k - 1) + d.xi(k) * (static_cast<double>(bits[static_cast<std::size_t>(k - 1)]) - theta);
  return d;
}

double abel_transform_difference(std::span<const double> xi, std::span<const Bit> bits,
                                 double theta, long m, long n) {
  if (m < 0 || m > n || static_cast<std::size_t>(n) >= xi.size() ||
      static_cast<std::size_t>(n) > bits.size())
    throw std::invalid_argument("abel_transform_difference: bad index range");
  std::vector<double> kappa(static_cast<std::size_t>(n) + 1, 0.0);
  for (long k = 1; k <= n; ++k)
    kappa[static_cast<std::size_t>(k)] =
        kappa[static_cast<std::size_t>(k - 1)] + (bits[static_cast<std::size_t>(k - 1)] - theta);
  auto at = [&](long k) { return kappa[static_cast<std::size_t>(k)]; };
  auto w = [&](long k) { return xi[static_cast<std::size_t>(k)]; };
  double s = 0.0;
  for (long k = m; k < n; ++k) s += (w(k) - w(k + 1)) * at(k);
  return s + w(n) * at(n) - w(m) * at(m);
}

std::vector<IndexPair> sample_pairs(long lo, long hi, std::size_t count, std::uint64_t seed) {
  if (lo > hi) throw std::invalid_argument("sample_pairs: empty range");
  std::vector<IndexPair> pairs;
  pairs.reserve(count + static_cast<std::size_t>(hi - lo));
  Rng rng(seed);
  const double width = static_cast<double>(hi - lo + 1);
  auto draw = [&] { return lo + std::min(hi - lo, static_cast<long>(rng.uniform() * width)); };
  for (std::size_t i = 0; i < count; ++i) {
    long m = draw();
    long n = draw();
    if (m > n) std::swap(m, n);
    pairs.push_back({m, n});
  }
  for (long m = lo; m < hi; ++m) pairs.push_back({m, m + 1});
  return pairs;
}

ConditionReport abel_bound_verify(const WeightedDeviation& dev, const RateEnvelope& env,
                             const DeviationStats& stats, std::span<const IndexPair> pairs) {
  const long H = stats.horizon;
  const long lo = std::max<long>(env.k0(), stats.first_index);
  ConditionReport r{"abel_bound_" + std::string(to_string(dev.kind)) + (dev.arm == Arm::A ? "_A" : "_B"), H};
  if (dev.horizon() < H / 2) throw std::invalid_argument("abel_bound_verify: deviation shorter than H/2");
  // prefix(j) = sum_{k<=j} xi_k phi'(k)
  std::vector<long double> prefix(static_cast<std::size_t>(H / 2) + 1, 0.0L);
  for (long k = 1; k <= H / 2; ++k)
    prefix[static_cast<std::size_t>(k)] =
        prefix[static_cast<std::size_t>(k - 1)] + static_cast<long double>(dev.xi(k)) * env.eval(k).phi_prime;
  Tally tally;
  for (const auto& p : pairs) {
    if (p.m < lo || p.m > p.n || p.n > H / 2)
      throw std::invalid_argument("abel_bound_verify: pair outside [k0, H/2]");
    const double lhs = std::abs(dev.values(p.n) - dev.values(p.m));
    const double sum = static_cast<double>(prefix[static_cast<std::size_t>(p.n)] -
                                           prefix[static_cast<std::size_t>(p.m)]);
    const double rhs = stats.beta(p.m) * (sum + 2.0 * dev.xi(p.m) * env(p.m)) + kInequalitySlack;
    tally.add(rhs - lhs, p);
  }
  tally.finish(r);
  r.with("truncated_at", static_cast<double>(H));
  return r;
}

PsiTable psi(std::span<const Bit> bits_a, std::span<const Bit> bits_b, double theta_a,
             double theta_b, const PrefixTables& t, long n) {
  if (static_cast<std::size_t>(n) > bits_a.size() || static_cast<std::size_t>(n) > bits_b.size())
    throw HorizonOverrun("payoff streams shorter than the requested horizon");
  if (t.horizon() < n + 1) throw HorizonOverrun("psi needs the step table to reach N + 1");
  PsiTable p;
  p.values = Eigen::VectorXd::Zero(n + 1);
  const double gap = theta_a - theta_b;
  long double acc = 0.0L;
  for (long k = n; k >= 1; --k) {
    const auto i = static_cast<std::size_t>(k - 1);
    const double d = static_cast<double>(bits_a[i]) - static_cast<double>(bits_b[i]) - gap;
    acc += static_cast<long double>(t.gamma(k) / t.S(k - 1)) * d;
    p.values(k - 1) = static_cast<double>(acc);
  }
  p.tail_bound = 2.0 / ((1.0 - t.gamma(n + 1)) * t.S(n));
  return p;
}

ConditionReport psi_bound_verify(const PsiTable& p, const RateEnvelope& env, const DeviationStats& stats,
                              const PrefixTables& t) {
  const long N = p.horizon();
  ConditionReport r{"psi_bound", N};
  if (stats.horizon < N) throw std::invalid_argument("psi_bound_verify: beta truncated before N");
  const long lo = std::max<long>({env.k0(), stats.first_index, 1});
  Tally tally;
  for (long n = lo; n <= N / 2; ++n) {
    const PhiValues v = env.eval(n);
    const double bound = 2.0 * stats.beta(n) / t.S(n - 1) * (v.phi_prime + 2.0 * t.gamma(n) * v.phi) +
                         p.tail_bound;
    tally.add(bound - std::abs(p.values(n)), {n, n});
  }
  tally.finish(r);
  r.with("tail_bound", p.tail_bound).with("truncated_at", static_cast<double>(N));
  return r;
}

RPrimeTable r_prime(const DeviationStats& stats, const RateEnvelope& env, const PrefixTables& t) {
  const long H = stats.horizon;
  if (t.horizon() < H) throw HorizonOverrun("r_prime: step table shorter than beta horizon");
  RPrimeTable rp;
  rp.first = std::max<long>(env.k0(), stats.first_index);
  rp.truncated_at = H;
  rp.numerator = Eigen::VectorXd::Zero(H + 1);
  rp.values = Eigen::VectorXd::Zero(H + 1);
  double run = 0.0;
  for (long k = H; k >= rp.first; --k) {
    const PhiValues v = env.eval(k);
    run = std::max(run, stats.beta(k) * (v.phi_prime + 2.0 * t.gamma(k) * v.phi));
    rp.numerator(k) = 2.0 * run;
    rp.values(k) = 2.0 * run / (1.0 - t.gamma(k));
  }
  return rp;
}

ConditionReport lambda_increment_verify(const StepWindow& w, const RPrimeTable& rp,
                                        std::span<const IndexPair> pairs) {
  ConditionReport r{"lambda_increment", rp.truncated_at};
  Tally tally;
  for (const auto& p : pairs) {
    if (p.m < rp.first || p.m > p.n || !w.contains(p.m) || !w.contains(p.n))
      throw std::invalid_argument("lambda_increment_verify: pair outside the window or below k0");
    const double lhs = std::abs(w.lambda_at(p.n) - w.lambda_at(p.m));
    const double rhs =
        rp.values(p.m) * (w.sum_gf_at(p.n) - w.sum_gf_at(p.m) + 2.0 * f(w.x_at(p.n))) + kInequalitySlack;
    tally.add(rhs - lhs, p);
  }
  tally.finish(r);
  r.with("window_first", static_cast<double>(w.first))
      .with("window_last", static_cast<double>(w.last()))
      .with("truncated_at", static_cast<double>(rp.truncated_at));
  return r;
}

ConditionReport psi_identity_verify(const StepWindow& w, const PsiTable& p, const PrefixTables& t) {
  ConditionReport r{"psi_identity", p.horizon()};
  if (w.last() > p.horizon()) throw std::invalid_argument("psi_identity_verify: window past psi horizon");
  double acc = 0.0;
  double worst = 0.0;
  long worst_at = w.first;
  for (long k = w.first + 1; k <= w.last(); ++k) {
    acc += t.S(k - 1) * f(w.x_at(k - 1)) * (p.values(k - 1) - p.values(k));
    const double residual = std::abs((w.lambda_at(k) - w.lambda_at(w.first)) - acc);
    if (residual > worst) {
      worst = residual;
      worst_at = k;
    }
  }
  r.with("worst_residual", worst).with("worst_index", static_cast<double>(worst_at));
  r.verdict = worst <= kIdentityTolerance ? Verdict::pass : Verdict::fail;
  if (r.verdict == Verdict::fail) r.with("violation_index", static_cast<double>(worst_at));
  return r;
}

ConditionReport brake_mass_verify(const StepWindow& w, const PrefixTables& t, double theta_b) {
  ConditionReport r{"brake_mass", w.last()};
  const long first = w.first;
  const long last = w.last();
  // Won-B steps are read off the jumps of S_B; the right-hand side only sees
  // payoffs and the I-vs-X indicators.
  double won_b = 0.0, phi_b = 0.0, played_a_mass = 0.0, worst = 0.0;
  const long mid = first + (last - first) / 2;
  double first_max = 0.0, second_max = 0.0;
  for (long k = first; k <= last; ++k) {
    if (k > first) {
      const std::size_t s = w.step_slot(k);
      const double g = t.gamma(k);
      if (w.s_b_at(k) > w.s_b_at(k - 1)) won_b += g;
      phi_b += g * (static_cast<double>(w.eta_b[s]) - theta_b);
      played_a_mass += g * static_cast<double>(w.eta_b[s] * w.played_a[s]);
      const double rhs = theta_b * (t.Gamma(k) - t.Gamma(first)) + phi_b - played_a_mass;
      const double residual = std::abs(won_b - rhs);
      if (residual > worst) worst = residual;
      if (!(residual <= kIdentityTol))
        throw ConsistencyError("won-B step mass identity violated at step " + std::to_string(k));
    }
    const double ratio = w.s_b_at(k) * std::exp(-theta_b * t.Gamma(k));
    if (k <= mid) {
      first_max = std::max(first_max, ratio);
    } else {
      second_max = std::max(second_max, ratio);
    }
  }
  r.with("worst_identity_residual", worst)
      .with("first_half_max", first_max)
      .with("second_half_max", second_max)
      .with("window_first", static_cast<double>(first))
      .with("window_last", static_cast<double>(last));
  r.verdict = (last > first && second_max <= 1.1 * first_max) ? Verdict::pass : Verdict::indeterminate;
  return r;
}

ConditionReport gamma_tail_bound_verify(const PrefixTables& t, double theta_b) {
  const long N = t.horizon();
  ConditionReport r{"gamma_tail_bound", N};
  const ConditionReport growth = check_step_growth(t, theta_b);
  if (growth.verdict != Verdict::pass) {
    r.verdict = Verdict::indeterminate;
    r.with("applicable", 0.0);
    r.note = "step sequence fails the step-growth condition for this theta_B";
    return r;
  }
  std::vector<double> tail(static_cast<std::size_t>(N) + 1, 0.0);
  for (long l = N - 1; l >= 0; --l)
    tail[static_cast<std::size_t>(l)] = tail[static_cast<std::size_t>(l + 1)] + t.gamma(l + 1) * t.gamma(l + 1);
  auto shape = [&](long l) {
    const double log_t = theta_b * t.Gamma(l);  // log T_l^B
    return log_t * std::exp(-log_t);
  };
  const long l0 = std::max<long>(1, N / 8);
  const double C = tail[static_cast<std::size_t>(l0)] / shape(l0);
  Tally tally;
  for (long l = l0; l <= N / 2; ++l) {
    const double bound = C * shape(l);
    tally.add(bound * (1.0 + kInequalitySlack) - tail[static_cast<std::size_t>(l)], {l0, l});
  }
  r.with("applicable", 1.0).with("calibration_index", static_cast<double>(l0)).with("constant", C);
  tally.finish(r);
  return r;
}

ConditionReport abel_cauchy_verify(const WeightedDeviation& dev) {
  const long N = dev.horizon();
  if (N < 1000) throw std::invalid_argument("abel_cauchy_verify needs N >= 1000");
  ConditionReport r{"abel_cauchy_" + std::string(to_string(dev.kind)) + (dev.arm == Arm::A ? "_A" : "_B"), N};
  const double last = std::abs(dev.values(N) - dev.values(N / 2));
  const double prev = std::abs(dev.values(N / 2) - dev.values(N / 4));
  r.with("last_increment", last).with("prev_increment", prev);
  r.verdict = last <= std::max(1e-3, 0.25 * prev) ? Verdict::pass : Verdict::indeterminate;
  return r;
}

}  // namespace narendra
