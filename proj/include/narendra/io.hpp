#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "narendra/bandit.hpp"
#include "narendra/harness.hpp"
#include "narendra/report.hpp"

namespace narendra {

/// "%.17g"; non-finite values print as nan, inf, -inf.
std::string format_double(double v);

/// RFC 4180 field quoting: quoted iff the field holds a comma, quote, CR or LF.
std::string csv_field(const std::string& s);

nlohmann::json to_json(const ConditionReport& report);
nlohmann::json to_json(const SweepSummary& summary);
nlohmann::json reports_json(const std::vector<ConditionReport>& reports, const std::string& config_hash);
nlohmann::json run_report_json(const RunReport& report, const std::string& config_hash);

/// Columns n, X, M, Lambda, drift, S, S_B, Y_B, T_B, R_n.
std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);
/// One row per replica: replica, seed, status, X_N and per-replica verdicts.
std::string finals_csv(const std::vector<ReplicaOutcome>& outcomes);
/// Columns n, x.
std::string mean_field_csv(const Eigen::VectorXd& x);

/// Creates parent directories and writes `content`. Throws ConfigError when
/// the destination cannot be written.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace narendra
