#include "narendra/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace narendra {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

nlohmann::json to_json(const ConditionReport& r) {
  nlohmann::json witness = nlohmann::json::array();
  for (const auto& [key, value] : r.witness) witness.push_back({{"key", key}, {"value", value}});
  nlohmann::json j{{"condition_name", r.condition_name},
                   {"horizon", r.horizon},
                   {"verdict", std::string(to_string(r.verdict))},
                   {"witness", witness}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

namespace {

nlohmann::json counts_json(const VerdictCount& c) {
  return {{"pass", c.pass}, {"fail", c.fail}, {"indeterminate", c.indeterminate}};
}

}  // namespace

nlohmann::json to_json(const SweepSummary& s) {
  nlohmann::json finals = nlohmann::json::array();
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& o : s.outcomes) {
    if (o.error) {
      errors.push_back({{"replica", o.index}, {"error", *o.error}});
    } else {
      finals.push_back(o.x_final);
    }
  }
  const Quantiles& q = s.quantiles;
  return {{"schema_version", s.schema_version},
          {"config_hash", s.config_hash},
          {"replicas", s.replicas},
          {"completed", s.completed},
          {"errored", s.errored},
          {"errors", errors},
          {"thresholds", {{"hi", s.thresholds.hi}, {"lo", s.thresholds.lo}}},
          {"count_hi", s.count_hi},
          {"count_lo", s.count_lo},
          {"fraction_hi", s.fraction_hi},
          {"fraction_lo", s.fraction_lo},
          {"fraction_mid", s.fraction_mid},
          {"quantiles",
           {{"min", q.q00}, {"q05", q.q05}, {"q25", q.q25}, {"median", q.q50}, {"q75", q.q75}, {"q95", q.q95}, {"max", q.q100}}},
          {"verdict_counts",
           {{"decomposition_identity", counts_json(s.decomposition)},
            {"brake_bounds", counts_json(s.brake_bounds)},
            {"sf_monotone", counts_json(s.sf_monotone)},
            {"brake_trend", counts_json(s.brake_trend)}}},
          {"final_x", finals}};
}

nlohmann::json reports_json(const std::vector<ConditionReport>& reports, const std::string& hash) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& r : reports) arr.push_back(to_json(r));
  return {{"schema_version", kSchemaVersion}, {"config_hash", hash}, {"reports", arr}};
}

nlohmann::json run_report_json(const RunReport& rep, const std::string& hash) {
  const RunRecord& r = rep.record;
  nlohmann::json j = reports_json(rep.checks, hash);
  j["final"] = {{"n", r.horizon},
                {"X", r.x_final},
                {"M", r.decomposition.M},
                {"Lambda", r.decomposition.Lambda},
                {"drift", r.decomposition.drift},
                {"sum_gf", r.decomposition.sum_gf},
                {"S_B", r.brake.S_B},
                {"Y_B", r.brake.Y_B},
                {"log_T_B", r.brake.log_T_B},
                {"R_n", r.deviations.R()}};
  j["theta"] = {{"A", r.theta_a}, {"B", r.theta_b}};
  return j;
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
  std::string out = "n,X,M,Lambda,drift,S,S_B,Y_B,T_B,R_n\n";
  for (const auto& r : rows) {
    out += std::to_string(r.n);
    for (double v : {r.X, r.M, r.Lambda, r.drift, r.S, r.S_B, r.Y_B, r.T_B, r.R}) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

std::string finals_csv(const std::vector<ReplicaOutcome>& outcomes) {
  std::string out = "replica,seed,status,X_N,decomposition,brake_bounds,sf_monotone,brake_trend\n";
  for (const auto& o : outcomes) {
    out += std::to_string(o.index) + ',' + std::to_string(o.seed) + ',';
    if (o.error) {
      out += csv_field("error: " + *o.error) + ",,,,,\n";
      continue;
    }
    out += "ok," + format_double(o.x_final);
    for (Verdict v : {o.decomposition, o.brake_bounds, o.sf_monotone, o.brake_trend}) {
      out += ',';
      out += to_string(v);
    }
    out += '\n';
  }
  return out;
}

std::string mean_field_csv(const Eigen::VectorXd& x) {
  std::string out = "n,x\n";
  for (Eigen::Index n = 0; n < x.size(); ++n) out += std::to_string(n) + ',' + format_double(x(n)) + '\n';
  return out;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw ConfigError("cannot create output directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
  out.flush();
  if (!out) throw ConfigError("write failed for " + path.string());
}

}  // namespace narendra
