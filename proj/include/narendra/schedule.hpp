#pragma once

#include <Eigen/Core>
#include <variant>
#include <vector>

#include "narendra/report.hpp"

namespace narendra {

/// gamma_n = c / (c + n)
struct Rational {
  double c = 1.0;
};

/// gamma_n = min(a n^-rho, cap)
struct Power {
  double a = 1.0;
  double rho = 1.0;
  double cap = 0.9;
};

/// gamma_n = values[n - 1]
struct Scripted {
  std::vector<double> values;
};

using StepFamily = std::variant<Rational, Power, Scripted>;

/// Step n (1-based) of a family. Throws std::invalid_argument on invalid
/// parameters or a step outside (0,1), HorizonOverrun past a scripted table.
double step_at(const StepFamily& family, Eigen::Index n);

/// Prefix quantities of a step sequence, all indexed 0..N. Index 0 holds the
/// conventions gamma_0 = 0 (unused), Gamma_0 = 0, S_0 = Delta_0 = 1.
///
///   Gamma_n      = sum_{k<=n} gamma_k
///   S_n          = 1 / prod_{k<=n} (1 - gamma_k)
///   Delta_n      = gamma_n S_n
///   sumsq_n      = sum_{k<=n} gamma_k^2
///   sumsq_corr_n = sum_{k<=n} gamma_k^2 / (1 - gamma_k)
///
/// Immutable after construction.
struct PrefixTables {
  Eigen::VectorXd gamma;
  Eigen::VectorXd Gamma;
  Eigen::VectorXd S;
  Eigen::VectorXd Delta;
  Eigen::VectorXd sumsq;
  Eigen::VectorXd sumsq_corr;

  Eigen::Index horizon() const { return gamma.size() - 1; }
};

/// Throws std::range_error once S_n leaves the representable range (log S_n ~ 690).
PrefixTables build_prefix(const StepFamily& family, Eigen::Index n);

/// Monotone step sequence with non-stalling partial sums.
ConditionReport check_monotone_steps(const PrefixTables& tables);

/// gamma_n = O(Gamma_n exp(-theta_b Gamma_n)), judged by dyadic-block trend of
/// the ratio. Requires N >= 16.
ConditionReport check_step_growth(const PrefixTables& tables, double theta_b);

/// Vanishing tail of sum gamma_n^2.
ConditionReport check_square_summable(const PrefixTables& tables);

/// log S_n - sumsq_corr_n <= Gamma_n <= log S_n for every n.
ConditionReport check_sandwich(const PrefixTables& tables);

/// Final-block caps gamma_n n / log n <= 1/theta_b and Gamma_n / log n <= 1/theta_b
/// (5% slack). Requires N >= 100.
ConditionReport check_step_caps(const PrefixTables& tables, double theta_b);

}  // namespace narendra
