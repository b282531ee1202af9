#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "narendra/report.hpp"
#include "narendra/rng.hpp"

namespace narendra {

using Bit = std::uint8_t;

struct IidBernoulli {
  double theta;
  Rng rng;
};

/// eta_i = 1{S_i in C} for a finite chain S started from its stationary law.
struct MarkovIndicator {
  Eigen::MatrixXd transition;
  std::vector<bool> in_target;
  Eigen::MatrixXd cumulative;  // row-wise cumulative sums of `transition`
  double theta;
  Eigen::Index state;
  Rng rng;
};

/// eta_k = floor(k theta) - floor((k-1) theta)
struct Rotation {
  double theta;
  std::int64_t k = 0;
};

struct ScriptedBits {
  std::vector<Bit> bits;
  double theta;
  std::size_t pos = 0;
};

/// Per-arm payoff stream. Owned by exactly one run.
class PayoffSource {
 public:
  static PayoffSource iid(double theta, std::uint64_t seed);
  /// Throws std::invalid_argument unless `transition` is row-stochastic and
  /// irreducible and `target` holds valid state indices.
  static PayoffSource markov(Eigen::MatrixXd transition, std::span<const int> target,
                             std::uint64_t seed);
  static PayoffSource rotation(double theta);
  static PayoffSource scripted(std::vector<Bit> bits, double theta);

  /// Next payoff bit. Throws HorizonOverrun when a scripted table runs out.
  Bit next_bit();
  double nominal_mean() const;

 private:
  using Impl = std::variant<IidBernoulli, MarkovIndicator, Rotation, ScriptedBits>;
  explicit PayoffSource(Impl impl) : impl_(std::move(impl)) {}
  Impl impl_;
};

/// Reads a file of '0'/'1' characters; whitespace is ignored, anything else
/// throws ConfigError.
std::vector<Bit> load_bit_file(const std::filesystem::path& path);

/// Stationary law of a finite irreducible chain (direct linear solve).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

/// pi(C) for the stationary law pi. Throws std::invalid_argument for a
/// non-stochastic, reducible, or oversized (> 64 states) chain.
double stationary_mean(const Eigen::MatrixXd& transition, std::span<const int> target);

/// Running signed deviations kappa_n = sum_{k<=n} (eta_k - theta) for both arms
/// and R_n = max(|kappa_A|, |kappa_B|). Hit counts are kept as integers so
/// that sum eta = kappa + n theta holds up to one rounding.
class DeviationTracker {
 public:
  DeviationTracker(double theta_a, double theta_b, long history_stride = 1);

  void record(Bit eta_a, Bit eta_b);

  long steps() const { return n_; }
  long ones_a() const { return ones_a_; }
  long ones_b() const { return ones_b_; }
  double theta_a() const { return theta_a_; }
  double theta_b() const { return theta_b_; }
  double kappa_a() const { return static_cast<double>(ones_a_) - static_cast<double>(n_) * theta_a_; }
  double kappa_b() const { return static_cast<double>(ones_b_) - static_cast<double>(n_) * theta_b_; }
  double R() const;

  long history_stride() const { return stride_; }
  /// (n, R_n) for n = 0, stride, 2 stride, ...
  const std::vector<std::pair<long, double>>& history() const { return history_; }

 private:
  double theta_a_, theta_b_;
  long stride_;
  long n_ = 0;
  long ones_a_ = 0, ones_b_ = 0;
  std::vector<std::pair<long, double>> history_;
};

/// Draws (eta_A, eta_B) for the next time step. Both sources always advance.
std::pair<Bit, Bit> next_pair(PayoffSource& a, PayoffSource& b, DeviationTracker& tracker);

struct PhiValues {
  double phi;
  double phi_prime;   // phi(n) - phi(n-1)
  double phi_second;  // phi(n-1) + phi(n+1) - 2 phi(n)
};

/// Rate envelope phi: Linear (phi(n) = n) or LogPower (phi(n) = n / log(n+2)^(1+eps)).
class RateEnvelope {
 public:
  enum class Kind { linear, log_power };

  static RateEnvelope linear();
  /// Computes k0 at construction: the first index from which discrete
  /// concavity and monotonicity hold over a 10^4-point window, raised if the
  /// continuous second derivative is positive anywhere past it.
  static RateEnvelope log_power(double epsilon);

  Kind kind() const { return kind_; }
  double epsilon() const { return epsilon_; }
  long k0() const { return k0_; }

  double operator()(long n) const;
  /// n >= 1.
  PhiValues eval(long n) const;
  /// Continuous d^2 phi / dx^2 for the LogPower kind (0 for Linear).
  double second_derivative(double x) const;

 private:
  RateEnvelope(Kind kind, double epsilon) : kind_(kind), epsilon_(epsilon) {}
  Kind kind_;
  double epsilon_ = 0.0;
  long k0_ = 1;
};

/// alpha_n = R_n / phi(n) and the horizon-truncated beta_n = max_{n<=k<=H} alpha_k,
/// defined for first_index <= n <= horizon (entries below first_index are 0).
struct DeviationStats {
  long first_index = 3;
  long horizon = 0;  // truncation point of every sup in beta
  Eigen::VectorXd R;
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

DeviationStats deviation_stats(const DeviationTracker& tracker, const RateEnvelope& envelope,
                               long horizon);

/// R_n / phi(n) -> 0, judged on dyadic block maxima. Requires horizon >= 1000.
ConditionReport check_deviation_envelope(const DeviationStats& stats);

}  // namespace narendra
