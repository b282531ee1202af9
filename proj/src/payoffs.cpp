#include "narendra/payoffs.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>

namespace narendra {
namespace {

constexpr long kConcavityWindow = 10000;
constexpr long kConcavityScanLimit = 1000000;
constexpr Eigen::Index kMaxStates = 64;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_mean(double theta, const char* what) {
  if (!(theta > 0.0 && theta < 1.0))
    throw std::invalid_argument(std::string(what) + ": nominal mean must lie in (0,1)");
}

std::vector<bool> reachable(const Eigen::MatrixXd& P, bool reverse) {
  const Eigen::Index n = P.rows();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double w = reverse ? P(j, i) : P(i, j);
      if (w > 0.0 && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        stack.push_back(j);
      }
    }
  }
  return seen;
}

void validate_chain(const Eigen::MatrixXd& P) {
  if (P.rows() == 0 || P.rows() != P.cols())
    throw std::invalid_argument("transition matrix must be square and non-empty");
  if (P.rows() > kMaxStates) throw std::invalid_argument("at most 64 states are supported");
  if ((P.array() < 0.0).any() || !P.allFinite())
    throw std::invalid_argument("transition matrix has negative or non-finite entries");
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    if (std::abs(P.row(i).sum() - 1.0) > 1e-12)
      throw std::invalid_argument("transition matrix row " + std::to_string(i) +
                                  " does not sum to 1");
  const auto fwd = reachable(P, false);
  const auto bwd = reachable(P, true);
  const bool irreducible = std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
                           std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
  if (!irreducible)
    throw std::invalid_argument("transition matrix is reducible: no unique stationary law");
}

std::vector<bool> target_mask(Eigen::Index states, std::span<const int> target) {
  std::vector<bool> mask(static_cast<std::size_t>(states), false);
  for (int s : target) {
    if (s < 0 || s >= states) throw std::invalid_argument("target state index out of range");
    mask[static_cast<std::size_t>(s)] = true;
  }
  return mask;
}

Eigen::Index sample_row(const Eigen::Ref<const Eigen::RowVectorXd>& cumulative, double u) {
  const Eigen::Index n = cumulative.size();
  for (Eigen::Index j = 0; j + 1 < n; ++j)
    if (u < cumulative(j)) return j;
  return n - 1;
}

}  // namespace

PayoffSource PayoffSource::iid(double theta, std::uint64_t seed) {
  require_mean(theta, "iid source");
  return PayoffSource(IidBernoulli{theta, Rng(seed)});
}

PayoffSource PayoffSource::markov(Eigen::MatrixXd transition, std::span<const int> target,
                                  std::uint64_t seed) {
  const double theta = stationary_mean(transition, target);
  require_mean(theta, "markov source");
  const Eigen::Index n = transition.rows();
  MarkovIndicator m{std::move(transition), target_mask(n, target), Eigen::MatrixXd(n, n), theta, 0,
                    Rng(seed)};
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      acc += m.transition(i, j);
      m.cumulative(i, j) = acc;
    }
    m.cumulative(i, n - 1) = 1.0;
  }
  // S_0 drawn from the stationary law.
  const Eigen::VectorXd pi = stationary_distribution(m.transition);
  Eigen::RowVectorXd cum(n);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) cum(j) = (acc += pi(j));
  cum(n - 1) = 1.0;
  m.state = sample_row(cum, m.rng.uniform());
  return PayoffSource(std::move(m));
}

PayoffSource PayoffSource::rotation(double theta) {
  require_mean(theta, "rotation source");
  return PayoffSource(Rotation{theta, 0});
}

PayoffSource PayoffSource::scripted(std::vector<Bit> bits, double theta) {
  require_mean(theta, "scripted source");
  for (Bit b : bits)
    if (b > 1) throw std::invalid_argument("scripted payoffs must be 0 or 1");
  return PayoffSource(ScriptedBits{std::move(bits), theta, 0});
}

Bit PayoffSource::next_bit() {
  return std::visit(
      overloaded{
          [](IidBernoulli& s) -> Bit { return s.rng.uniform() < s.theta ? 1 : 0; },
          [](MarkovIndicator& s) -> Bit {
            s.state = sample_row(s.cumulative.row(s.state), s.rng.uniform());
            return s.in_target[static_cast<std::size_t>(s.state)] ? 1 : 0;
          },
          [](Rotation& s) -> Bit {
            const double prev = std::floor(static_cast<double>(s.k) * s.theta);
            ++s.k;
            const double cur = std::floor(static_cast<double>(s.k) * s.theta);
            return static_cast<Bit>(cur - prev);
          },
          [](ScriptedBits& s) -> Bit {
            if (s.pos >= s.bits.size())
              throw HorizonOverrun("scripted payoff stream exhausted after " +
                                   std::to_string(s.bits.size()) + " steps");
            return s.bits[s.pos++];
          },
      },
      impl_);
}

double PayoffSource::nominal_mean() const {
  return std::visit([](const auto& s) { return s.theta; }, impl_);
}

std::vector<Bit> load_bit_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read payoff file " + path.string());
  std::vector<Bit> bits;
  for (auto it = std::istreambuf_iterator<char>(in); it != std::istreambuf_iterator<char>(); ++it) {
    const char c = *it;
    if (c == '0' || c == '1') {
      bits.push_back(static_cast<Bit>(c - '0'));
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      throw ConfigError("payoff file " + path.string() + " contains a character other than 0/1");
    }
  }
  return bits;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P) {
  validate_chain(P);
  const Eigen::Index n = P.rows();
  // pi (P - I) = 0 with one equation replaced by sum(pi) = 1.
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd pi = A.fullPivLu().solve(rhs);
  pi = pi.cwiseMax(0.0);
  return pi / pi.sum();
}

double stationary_mean(const Eigen::MatrixXd& P, std::span<const int> target) {
  const Eigen::VectorXd pi = stationary_distribution(P);
  const auto mask = target_mask(P.rows(), target);
  double theta = 0.0;
  for (Eigen::Index s = 0; s < P.rows(); ++s)
    if (mask[static_cast<std::size_t>(s)]) theta += pi(s);
  return theta;
}

DeviationTracker::DeviationTracker(double theta_a, double theta_b, long history_stride)
    : theta_a_(theta_a), theta_b_(theta_b), stride_(history_stride) {
  if (stride_ < 1) throw std::invalid_argument("history stride must be >= 1");
  history_.emplace_back(0, 0.0);
}

double DeviationTracker::R() const { return std::max(std::abs(kappa_a()), std::abs(kappa_b())); }

void DeviationTracker::record(Bit eta_a, Bit eta_b) {
  ++n_;
  ones_a_ += eta_a;
  ones_b_ += eta_b;
  if (n_ % stride_ == 0) history_.emplace_back(n_, R());
}

std::pair<Bit, Bit> next_pair(PayoffSource& a, PayoffSource& b, DeviationTracker& tracker) {
  const Bit ea = a.next_bit();
  const Bit eb = b.next_bit();
  tracker.record(ea, eb);
  return {ea, eb};
}

RateEnvelope RateEnvelope::linear() { return RateEnvelope(Kind::linear, 0.0); }

RateEnvelope RateEnvelope::log_power(double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("LogPower envelope needs epsilon > 0");
  RateEnvelope env(Kind::log_power, epsilon);
  auto good = [&](long n) {
    const PhiValues v = env.eval(n);
    return v.phi_second <= 0.0 && env(n + 1) >= v.phi;
  };
  long k0 = 1;
  long run = 0;
  for (long n = 1; n <= kConcavityScanLimit && run <= kConcavityWindow; ++n) {
    if (good(n)) {
      ++run;
    } else {
      run = 0;
      k0 = n + 1;
    }
  }
  if (run <= kConcavityWindow)
    throw std::invalid_argument("LogPower envelope: no concave stretch found");
  // Continuous cross-check: concavity on [k-1, k+1] implies discrete concavity at k.
  for (double x = std::max(0.0, static_cast<double>(k0) - 1.0);
       x <= static_cast<double>(k0 + kConcavityWindow); x += 0.25) {
    if (env.second_derivative(x) > 0.0) k0 = std::max(k0, static_cast<long>(std::ceil(x)) + 2);
  }
  env.k0_ = k0;
  return env;
}

double RateEnvelope::operator()(long n) const {
  const double x = static_cast<double>(n);
  if (kind_ == Kind::linear) return x;
  return x / std::pow(std::log(x + 2.0), 1.0 + epsilon_);
}

PhiValues RateEnvelope::eval(long n) const {
  if (n < 1) throw std::invalid_argument("discrete derivatives need n >= 1");
  const double prev = (*this)(n - 1);
  const double cur = (*this)(n);
  const double next = (*this)(n + 1);
  return {cur, cur - prev, prev + next - 2.0 * cur};
}

double RateEnvelope::second_derivative(double x) const {
  if (kind_ == Kind::linear) return 0.0;
  const double L = std::log(x + 2.0);
  const double e = epsilon_;
  return (1.0 + e) / ((x + 2.0) * std::pow(L, 2.0 + e)) *
         (-2.0 + x / (x + 2.0) * (1.0 + (2.0 + e) / L));
}

DeviationStats deviation_stats(const DeviationTracker& tracker, const RateEnvelope& envelope,
                               long horizon) {
  if (tracker.history_stride() != 1)
    throw std::invalid_argument("deviation_stats needs a stride-1 tracker history");
  if (tracker.steps() < horizon)
    throw std::invalid_argument("tracker holds fewer steps than the requested horizon");
  DeviationStats s;
  s.first_index = std::max<long>(envelope.k0(), 3);
  s.horizon = horizon;
  s.R = Eigen::VectorXd::Zero(horizon + 1);
  s.alpha = Eigen::VectorXd::Zero(horizon + 1);
  s.beta = Eigen::VectorXd::Zero(horizon + 1);
  const auto& hist = tracker.history();
  for (long n = 0; n <= horizon; ++n) s.R(n) = hist[static_cast<std::size_t>(n)].second;
  for (long n = s.first_index; n <= horizon; ++n) {
    const double phi = envelope(n);
    if (!(phi > 0.0)) throw std::invalid_argument("rate envelope vanishes at n = " + std::to_string(n));
    s.alpha(n) = s.R(n) / phi;
  }
  double run = 0.0;
  for (long n = horizon; n >= s.first_index; --n) {
    run = std::max(run, s.alpha(n));
    s.beta(n) = run;
  }
  return s;
}

ConditionReport check_deviation_envelope(const DeviationStats& s) {
  const long N = s.horizon;
  if (N < 1000) throw std::invalid_argument("check_deviation_envelope needs a horizon >= 1000");
  ConditionReport r{"deviation_envelope", N};
  const long ref_lo = std::max(s.first_index, N / 64);
  const double ref = s.alpha.segment(ref_lo, N / 2 - ref_lo).maxCoeff();
  const double last = s.alpha.segment(N / 2, N - N / 2 + 1).maxCoeff();
  r.with("reference_block_max", ref).with("last_block_max", last).with("truncated_at", N);
  if (last <= 0.95 * ref || last <= 1e-3) {
    r.verdict = Verdict::pass;
  } else if (last >= ref) {
    r.verdict = Verdict::fail;
    Eigen::Index where = 0;
    s.alpha.segment(N / 2, N - N / 2 + 1).maxCoeff(&where);
    r.with("violation_index", static_cast<double>(N / 2 + where));
  } else {
    r.verdict = Verdict::indeterminate;
  }
  return r;
}

}  // namespace narendra
