#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "narendra/payoffs.hpp"
#include "narendra/report.hpp"
#include "narendra/rng.hpp"
#include "narendra/schedule.hpp"

namespace narendra {

enum class Arm : std::uint8_t { A, B };

inline double f(double x) { return x * (1.0 - x); }

struct StepTrace {
  long n;          // index of the state produced by this step
  double uniform;  // I_n
  Arm played;      // U_n
  Bit eta_a;
  Bit eta_b;
  double x_prev;
  double x;
};

/// Play-A probability X_n and the stream of I_n draws.
struct BanditState {
  long n = 0;
  double x = 0.5;
  Rng uniforms{0};
};

/// One step of the reward-inaction rule with a drawn I. U = A iff I <= X_prev.
StepTrace step(BanditState& state, double gamma, Bit eta_a, Bit eta_b);

/// Same update with I supplied by the caller.
StepTrace step_with_uniform(BanditState& state, double gamma, double uniform, Bit eta_a,
                            Bit eta_b);

/// epsilon_k = eta_A (1-X)(1{U=A} - X) + eta_B X ((1-X) - 1{U=B}), X = X_{k-1}.
double martingale_increment(double x_prev, Arm played, Bit eta_a, Bit eta_b);

/// X_prev eps(A) + (1-X_prev) eps(B); zero in exact arithmetic.
double branch_weighted_mean(double x_prev, Bit eta_a, Bit eta_b);

/// X_prev eps(A)^2 + (1-X_prev) eps(B)^2; bounded by f(X_prev).
double branch_second_moment(double x_prev, Bit eta_a, Bit eta_b);

/// X_n = x + M_n + Lambda_n + drift_n, with
///   M_n      = sum gamma_k eps_k
///   Lambda_n = sum gamma_k f(X_{k-1}) (eta_A - eta_B - (theta_A - theta_B))
///   drift_n  = (theta_A - theta_B) sum gamma_k f(X_{k-1})
struct Decomposition {
  double x0 = 0.5;
  double M = 0.0;
  double Lambda = 0.0;
  double drift = 0.0;
  double sum_gf = 0.0;

  double reconstruct() const { return x0 + M + Lambda + drift; }
};

inline constexpr double kIdentityTolerance = 1e-8;

/// Advances the decomposition by one step and checks the identity against
/// trace.x. Throws ConsistencyError beyond kIdentityTolerance. Returns the
/// absolute residual.
double decompose_step(Decomposition& d, const StepTrace& trace, double gamma, double theta_a,
                      double theta_b);

/// S_n^B = 1 / prod (1 - gamma_k 1{B played and won at k}), S_0^B = 1.
/// Y_B follows the additive update and is cross-checked against S_B X.
/// T_B = exp(theta_B Gamma_n).
struct BrakeDiagnostics {
  double S_B = 1.0;
  double Y_B = 0.5;
  double log_T_B = 0.0;
  double T_B = 1.0;
};

/// Throws ConsistencyError if Y_B drifts from S_B X by more than 1e-10 (relative).
void brake_step(BrakeDiagnostics& diag, const StepTrace& trace, double gamma, double Gamma_n,
                double theta_b);

struct MeanFieldConfig {
  double theta_a;
  double theta_b;
  double x0;
};

/// x_{n+1} = x_n + gamma_{n+1} (theta_A - theta_B) x_n (1 - x_n), n = 0..N.
Eigen::VectorXd mean_field_trajectory(const MeanFieldConfig& config, const PrefixTables& tables,
                                      long n);

struct RunOptions {
  long sample_stride = 0;     // 0: ceil(N / 10^4)
  long dense_prefix = 10000;  // stride-1 window [0, dense_prefix]
  long mid_window = 0;        // width of an extra stride-1 window centred at N/2
  bool keep_streams = false;  // keep both payoff streams for the full horizon
  long ratio_log_stride = 0;  // 0: same as sample_stride
};

struct BanditConfig {
  std::shared_ptr<const PrefixTables> tables;
  PayoffSource arm_a;
  PayoffSource arm_b;
  double x0 = 0.5;
  long horizon = 0;
  std::uint64_t uniform_seed = 0;
  RunOptions options;
};

struct TrajectoryRow {
  long n;
  double X, M, Lambda, drift, S, S_B, Y_B, T_B, R;
};

/// Stride-1 record of states first..last and of the steps between them.
struct StepWindow {
  long first = 0;
  std::vector<double> x;       // X_n, n = first..last
  std::vector<double> lambda;  // Lambda_n
  std::vector<double> sum_gf;  // sum_{k<=n} gamma_k f(X_{k-1})
  std::vector<double> s_b;     // S_n^B
  std::vector<double> uniform;  // I_k, k = first+1..last
  std::vector<Bit> played_a;    // 1{U_k = A}
  std::vector<Bit> eta_a;
  std::vector<Bit> eta_b;

  long last() const { return first + static_cast<long>(x.size()) - 1; }
  bool contains(long n) const { return n >= first && n <= last(); }
  double x_at(long n) const { return x[static_cast<std::size_t>(n - first)]; }
  double lambda_at(long n) const { return lambda[static_cast<std::size_t>(n - first)]; }
  double sum_gf_at(long n) const { return sum_gf[static_cast<std::size_t>(n - first)]; }
  double s_b_at(long n) const { return s_b[static_cast<std::size_t>(n - first)]; }
  /// Step k in (first, last].
  std::size_t step_slot(long k) const { return static_cast<std::size_t>(k - first - 1); }
};

struct BrakeRatioSample {
  long n;
  double x_sb_over_log_sb;  // NaN while S_B = 1
  double sb_over_tb;
};

/// Checks performed at every step of a run.
struct InvariantSummary {
  double worst_decomposition_residual = 0.0;
  double worst_branch_mean = 0.0;         // |X eps(A) + (1-X) eps(B)|
  double worst_second_moment_excess = -1.0;  // max of second moment - f(X_prev)
  double min_yb_minus_x0 = 0.0;           // Y_B - x0 >= 0
  bool x_in_unit_interval = true;
  bool sb_le_s = true;
  double worst_lower_bound_excess = 0.0;  // max of x0/S_n - X_n and x0/S_n^B - X_n
  long sf_violations = 0;                 // S_k f(X_k) monotonicity failures
  double brake_ratio_first_half = 0.0;       // running max of S_B / T_B over [0, N/2]
  double brake_ratio_second_half = 0.0;      // over (N/2, N]
  Verdict brake_trend = Verdict::indeterminate;
};

struct RunRecord {
  long horizon = 0;
  double x0 = 0.5;
  double theta_a = 0.5;
  double theta_b = 0.5;
  double x_final = 0.5;
  Decomposition decomposition;
  BrakeDiagnostics brake;
  std::vector<TrajectoryRow> trajectory;
  std::vector<StepWindow> windows;
  std::vector<BrakeRatioSample> ratio_log;
  DeviationTracker deviations{0.5, 0.5};
  std::vector<Bit> stream_a;  // only with keep_streams
  std::vector<Bit> stream_b;
  InvariantSummary invariants;
};

/// Composes step, decompose_step and brake_step over the horizon.
/// Propagates ConsistencyError and HorizonOverrun.
RunRecord run(BanditConfig config);

/// S_k f(X_k) >= S_{k-1} f(X_{k-1}) - 1e-12 S_k and f(X_k) >= (1-gamma_k) f(X_{k-1})
/// over a stride-1 window.
ConditionReport check_sf_monotone(const StepWindow& window, const PrefixTables& tables);

}  // namespace narendra
