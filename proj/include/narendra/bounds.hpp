#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <vector>

#include "narendra/bandit.hpp"
#include "narendra/payoffs.hpp"
#include "narendra/report.hpp"
#include "narendra/schedule.hpp"

namespace narendra {

enum class WeightKind { gamma, gamma_over_Gamma, gamma_over_S_lag };

std::string_view to_string(WeightKind kind);

/// xi_k for k = 0..n (xi_0 = 0, unused).
Eigen::VectorXd weights(WeightKind kind, const PrefixTables& tables, long n);

/// Phi_n = sum_{k<=n} xi_k (eta_k - theta), n = 0..N.
struct WeightedDeviation {
  WeightKind kind = WeightKind::gamma;
  Arm arm = Arm::A;
  double theta = 0.5;
  Eigen::VectorXd xi;
  Eigen::VectorXd values;

  long horizon() const { return static_cast<long>(values.size()) - 1; }
};

/// Throws std::invalid_argument if the weights are not nonincreasing.
WeightedDeviation phi_dev(WeightKind kind, Arm arm, std::span<const Bit> bits, double theta,
                          const PrefixTables& tables, long n);

/// Abel-transformed form of Phi_n - Phi_m:
///   sum_{k=m}^{n-1} (xi_k - xi_{k+1}) kappa_k + xi_n kappa_n - xi_m kappa_m
/// with kappa_k = sum_{j<=k} (eta_j - theta). Reference for the direct sum.
double abel_transform_difference(std::span<const double> xi, std::span<const Bit> bits,
                                 double theta, long m, long n);

struct IndexPair {
  long m;
  long n;
};

/// `count` uniform pairs m <= n in [lo, hi] plus every adjacent pair (m, m+1).
std::vector<IndexPair> sample_pairs(long lo, long hi, std::size_t count, std::uint64_t seed);

/// |Phi_n - Phi_m| <= beta_m (sum_{k=m+1}^n xi_k phi'(k) + 2 xi_m phi(m)).
/// Pairs must satisfy k0 <= m <= n <= H/2 with H the beta truncation horizon.
ConditionReport abel_bound_verify(const WeightedDeviation& dev, const RateEnvelope& envelope,
                             const DeviationStats& stats, std::span<const IndexPair> pairs);

struct PsiValue {
  long n;
  double value;
  double tail_bound;
};

/// Psi_n truncated at N: sum_{k=n+1}^N (gamma_k / S_{k-1}) d_k with
/// d_k = eta_A,k - eta_B,k - (theta_A - theta_B). The omitted tail is at most
/// 2 / ((1 - gamma_{N+1}) S_N); tables must reach N + 1.
struct PsiTable {
  Eigen::VectorXd values;
  double tail_bound = 0.0;

  long horizon() const { return static_cast<long>(values.size()) - 1; }
  PsiValue at(long n) const { return {n, values(n), tail_bound}; }
};

PsiTable psi(std::span<const Bit> bits_a, std::span<const Bit> bits_b, double theta_a,
             double theta_b, const PrefixTables& tables, long n);

/// |Psi_n| <= (2 beta_n / S_{n-1}) [phi'(n) + 2 gamma_n phi(n)] + tail for
/// n in [k0, N/2].
ConditionReport psi_bound_verify(const PsiTable& psi, const RateEnvelope& envelope,
                              const DeviationStats& stats, const PrefixTables& tables);

/// R'_n = 2 sup_{n<=k<=H} beta_k [phi'(k) + 2 gamma_k phi(k)] / (1 - gamma_n).
struct RPrimeTable {
  long first = 0;
  long truncated_at = 0;
  Eigen::VectorXd numerator;  // the sup, before dividing by (1 - gamma_n)
  Eigen::VectorXd values;
};

RPrimeTable r_prime(const DeviationStats& stats, const RateEnvelope& envelope,
                    const PrefixTables& tables);

/// |Lambda_n - Lambda_m| <= R'_m [sum_{k=m+1}^n gamma_k f(X_{k-1}) + 2 f(X_n)].
ConditionReport lambda_increment_verify(const StepWindow& window, const RPrimeTable& rp,
                                        std::span<const IndexPair> pairs);

/// Lambda_n - Lambda_first = sum S_{k-1} f(X_{k-1}) (Psi_{k-1} - Psi_k) on the window.
ConditionReport psi_identity_verify(const StepWindow& window, const PsiTable& psi,
                                    const PrefixTables& tables);

/// Won-B step mass against theta_B Gamma_n + Phi^B_{n,gamma} - sum gamma_k eta_B,k 1{I_k <= X_{k-1}}
/// (exact, throws ConsistencyError beyond 1e-10), plus the trend of S_n^B exp(-theta_B Gamma_n).
ConditionReport brake_mass_verify(const StepWindow& window, const PrefixTables& tables,
                                          double theta_b);

/// sum_{n>l} gamma_n^2 <= C log(T_l) / T_l, C fitted at l0 = N/8, for l in [l0, N/2].
/// Not applicable (indeterminate, applicable = 0) unless check_step_growth passes.
ConditionReport gamma_tail_bound_verify(const PrefixTables& tables, double theta_b);

/// Cauchy-tail contraction of Phi at dyadic scales. Requires N >= 1000.
ConditionReport abel_cauchy_verify(const WeightedDeviation& dev);

}  // namespace narendra
