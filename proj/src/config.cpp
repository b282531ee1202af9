#include "narendra/config.hpp"

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <set>

namespace narendra {
namespace {

using nlohmann::json;

void only_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : obj.items())
    if (!ok.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

const json& need(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError("missing key '" + std::string(key) + "' in " + where);
  return obj.at(key);
}

double number(const json& v, const std::string& what) {
  if (!v.is_number()) throw ConfigError(what + " must be a number");
  return v.get<double>();
}

long integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) throw ConfigError(what + " must be an integer");
  return v.get<long>();
}

std::string text(const json& v, const std::string& what) {
  if (!v.is_string()) throw ConfigError(what + " must be a string");
  return v.get<std::string>();
}

void open_unit(double v, const std::string& what) {
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(what + " must lie in (0,1)");
}

StepFamily parse_schedule(const json& s) {
  const std::string kind = text(need(s, "kind", "schedule"), "schedule.kind");
  if (kind == "rational") {
    only_keys(s, {"kind", "c"}, "schedule");
    const double c = number(need(s, "c", "schedule"), "schedule.c");
    if (!(c > 0.0)) throw ConfigError("schedule.c must be positive");
    return Rational{c};
  }
  if (kind == "power") {
    only_keys(s, {"kind", "a", "rho", "cap"}, "schedule");
    Power p{number(need(s, "a", "schedule"), "schedule.a"), number(need(s, "rho", "schedule"), "schedule.rho")};
    if (s.contains("cap")) p.cap = number(s.at("cap"), "schedule.cap");
    if (!(p.a > 0.0) || !(p.rho > 0.0 && p.rho <= 1.0)) throw ConfigError("power schedule needs a > 0, rho in (0,1]");
    open_unit(p.cap, "schedule.cap");
    return p;
  }
  if (kind == "scripted") {
    only_keys(s, {"kind", "values"}, "schedule");
    const json& v = need(s, "values", "schedule");
    if (!v.is_array() || v.empty()) throw ConfigError("schedule.values must be a non-empty array");
    Scripted sc;
    for (const auto& x : v) {
      sc.values.push_back(number(x, "schedule.values[]"));
      open_unit(sc.values.back(), "schedule.values[]");
    }
    return sc;
  }
  throw ConfigError("unknown schedule kind '" + kind + "'");
}

SourceSpec parse_source(const json& s, const std::string& where, const std::filesystem::path& base) {
  const std::string kind = text(need(s, "kind", where), where + ".kind");
  SourceSpec spec;
  if (kind == "iid" || kind == "rotation") {
    only_keys(s, {"kind", "theta"}, where);
    spec.kind = kind == "iid" ? SourceSpec::Kind::iid : SourceSpec::Kind::rotation;
    spec.theta = number(need(s, "theta", where), where + ".theta");
    open_unit(spec.theta, where + ".theta");
    return spec;
  }
  if (kind == "markov") {
    only_keys(s, {"kind", "matrix", "target", "theta"}, where);
    spec.kind = SourceSpec::Kind::markov;
    const json& m = need(s, "matrix", where);
    if (!m.is_array() || m.empty()) throw ConfigError(where + ".matrix must be a non-empty array of rows");
    const auto n = static_cast<Eigen::Index>(m.size());
    spec.matrix.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const json& row = m.at(static_cast<std::size_t>(i));
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
        throw ConfigError(where + ".matrix must be square");
      for (Eigen::Index j = 0; j < n; ++j)
        spec.matrix(i, j) = number(row.at(static_cast<std::size_t>(j)), where + ".matrix[][]");
    }
    const json& t = need(s, "target", where);
    if (!t.is_array() || t.empty()) throw ConfigError(where + ".target must be a non-empty array");
    for (const auto& x : t) spec.target.push_back(static_cast<int>(integer(x, where + ".target[]")));
    try {
      spec.theta = stationary_mean(spec.matrix, spec.target);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(where + ": " + e.what());
    }
    open_unit(spec.theta, where + " stationary mean");
    if (s.contains("theta") && std::abs(number(s.at("theta"), where + ".theta") - spec.theta) > 1e-9)
      throw ConfigError(where + ".theta does not match the stationary mean of the chain");
    return spec;
  }
  if (kind == "scripted") {
    only_keys(s, {"kind", "file", "theta"}, where);
    spec.kind = SourceSpec::Kind::scripted;
    spec.file = text(need(s, "file", where), where + ".file");
    spec.theta = number(need(s, "theta", where), where + ".theta");
    open_unit(spec.theta, where + ".theta");
    std::filesystem::path p(spec.file);
    if (p.is_relative()) p = base / p;
    spec.bits = load_bit_file(p);
    return spec;
  }
  throw ConfigError("unknown source kind '" + kind + "' in " + where);
}

json source_json(const SourceSpec& s) {
  switch (s.kind) {
    case SourceSpec::Kind::iid:
      return {{"kind", "iid"}, {"theta", s.theta}};
    case SourceSpec::Kind::rotation:
      return {{"kind", "rotation"}, {"theta", s.theta}};
    case SourceSpec::Kind::markov: {
      json rows = json::array();
      for (Eigen::Index i = 0; i < s.matrix.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < s.matrix.cols(); ++j) row.push_back(s.matrix(i, j));
        rows.push_back(row);
      }
      return {{"kind", "markov"}, {"matrix", rows}, {"target", s.target}, {"theta", s.theta}};
    }
    case SourceSpec::Kind::scripted: {
      // Hash the content, not the path.
      std::string bits(s.bits.size(), '0');
      for (std::size_t i = 0; i < s.bits.size(); ++i) bits[i] = static_cast<char>('0' + s.bits[i]);
      return {{"kind", "scripted"}, {"bits", bits}, {"theta", s.theta}};
    }
  }
  return {};
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::filesystem::path& base_dir) {
  only_keys(doc,
            {"schedule", "arms", "x0", "horizon", "replicas", "seed", "envelope", "output_dir",
             "sample_stride", "thresholds", "threads"},
            "config");
  ExperimentConfig c;
  try {
    c.schedule = parse_schedule(need(doc, "schedule", "config"));
    const json& arms = need(doc, "arms", "config");
    only_keys(arms, {"A", "B"}, "arms");
    c.arm_a = parse_source(need(arms, "A", "arms"), "arms.A", base_dir);
    c.arm_b = parse_source(need(arms, "B", "arms"), "arms.B", base_dir);
    c.x0 = number(need(doc, "x0", "config"), "x0");
    c.horizon = integer(need(doc, "horizon", "config"), "horizon");
    if (doc.contains("replicas")) c.replicas = integer(doc.at("replicas"), "replicas");
    if (doc.contains("seed")) {
      const json& s = doc.at("seed");
      if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
        throw ConfigError("seed must be a non-negative integer");
      c.seed = s.get<std::uint64_t>();
    }
    if (doc.contains("envelope")) {
      const json& e = doc.at("envelope");
      only_keys(e, {"kind", "epsilon"}, "envelope");
      const std::string kind = text(need(e, "kind", "envelope"), "envelope.kind");
      if (kind == "linear") {
        c.envelope = {RateEnvelope::Kind::linear, 0.0};
      } else if (kind == "log_power") {
        c.envelope = {RateEnvelope::Kind::log_power, e.contains("epsilon") ? number(e.at("epsilon"), "envelope.epsilon") : 1.0};
        if (!(c.envelope.epsilon > 0.0)) throw ConfigError("envelope.epsilon must be positive");
      } else {
        throw ConfigError("unknown envelope kind '" + kind + "'");
      }
    }
    if (doc.contains("output_dir")) c.output_dir = text(doc.at("output_dir"), "output_dir");
    if (doc.contains("sample_stride")) c.sample_stride = integer(doc.at("sample_stride"), "sample_stride");
    if (doc.contains("thresholds")) {
      const json& t = doc.at("thresholds");
      only_keys(t, {"hi", "lo"}, "thresholds");
      if (t.contains("hi")) c.thresholds.hi = number(t.at("hi"), "thresholds.hi");
      if (t.contains("lo")) c.thresholds.lo = number(t.at("lo"), "thresholds.lo");
    }
    if (doc.contains("threads")) c.threads = static_cast<int>(integer(doc.at("threads"), "threads"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  open_unit(c.x0, "x0");
  if (c.horizon < 0) throw ConfigError("horizon must be >= 0");
  if (c.replicas < 1) throw ConfigError("replicas must be >= 1");
  if (c.sample_stride < 0) throw ConfigError("sample_stride must be >= 0");
  if (c.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(c.thresholds.lo < c.x0 && c.x0 < c.thresholds.hi))
    throw ConfigError("thresholds must satisfy lo < x0 < hi");
  try {
    step_at(c.schedule, 1);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("schedule: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const ExperimentConfig& c) {
  json schedule = std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Rational>) {
          return {{"kind", "rational"}, {"c", s.c}};
        } else if constexpr (std::is_same_v<T, Power>) {
          return {{"kind", "power"}, {"a", s.a}, {"rho", s.rho}, {"cap", s.cap}};
        } else {
          return {{"kind", "scripted"}, {"values", s.values}};
        }
      },
      c.schedule);
  json envelope = c.envelope.kind == RateEnvelope::Kind::linear
                      ? json{{"kind", "linear"}}
                      : json{{"kind", "log_power"}, {"epsilon", c.envelope.epsilon}};
  return {{"schedule", schedule},
          {"arms", {{"A", source_json(c.arm_a)}, {"B", source_json(c.arm_b)}}},
          {"x0", c.x0},
          {"horizon", c.horizon},
          {"replicas", c.replicas},
          {"seed", c.seed},
          {"envelope", envelope},
          {"sample_stride", c.sample_stride},
          {"thresholds", {{"hi", c.thresholds.hi}, {"lo", c.thresholds.lo}}}};
}

std::string config_hash(const ExperimentConfig& c) {
  const std::string dump = to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PayoffSource make_source(const SourceSpec& s, std::uint64_t seed) {
  switch (s.kind) {
    case SourceSpec::Kind::iid:
      return PayoffSource::iid(s.theta, seed);
    case SourceSpec::Kind::rotation:
      return PayoffSource::rotation(s.theta);
    case SourceSpec::Kind::markov:
      return PayoffSource::markov(s.matrix, s.target, seed);
    case SourceSpec::Kind::scripted:
      return PayoffSource::scripted(s.bits, s.theta);
  }
  throw ConfigError("unknown source kind");
}

RateEnvelope make_envelope(const EnvelopeSpec& e) {
  return e.kind == RateEnvelope::Kind::linear ? RateEnvelope::linear() : RateEnvelope::log_power(e.epsilon);
}

}  // namespace narendra
