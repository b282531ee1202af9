#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "narendra/payoffs.hpp"
#include "narendra/schedule.hpp"

namespace narendra {

struct SourceSpec {
  enum class Kind { iid, markov, rotation, scripted };
  Kind kind = Kind::iid;
  double theta = 0.5;          // declared, or the stationary mean for markov
  Eigen::MatrixXd matrix;      // markov
  std::vector<int> target;     // markov
  std::string file;            // scripted, as written in the config
  std::vector<Bit> bits;       // scripted, loaded at parse time
};

struct EnvelopeSpec {
  RateEnvelope::Kind kind = RateEnvelope::Kind::log_power;
  double epsilon = 1.0;
};

struct Thresholds {
  double hi = 0.9;
  double lo = 1e-3;
};

struct ExperimentConfig {
  StepFamily schedule = Rational{2.0};
  SourceSpec arm_a;
  SourceSpec arm_b;
  double x0 = 0.5;
  long horizon = 1;
  long replicas = 1;
  std::uint64_t seed = 0;
  EnvelopeSpec envelope;
  std::string output_dir = "out";
  long sample_stride = 0;
  Thresholds thresholds;
  int threads = 1;
};

/// Parses and validates a config document. Unknown keys, wrong types and
/// out-of-range values throw ConfigError. Scripted payoff files are resolved
/// relative to `base_dir`.
ExperimentConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical form (sorted keys) used for hashing and echoing.
nlohmann::json to_json(const ExperimentConfig& config);

/// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

PayoffSource make_source(const SourceSpec& spec, std::uint64_t seed);
RateEnvelope make_envelope(const EnvelopeSpec& spec);

}  // namespace narendra
