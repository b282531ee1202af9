#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace narendra {

enum class Verdict { pass, fail, indeterminate };

std::string_view to_string(Verdict v);

/// Outcome of a finite-horizon check. `witness` keeps insertion order so that
/// serialized reports are byte-stable.
struct ConditionReport {
  std::string condition_name;
  long horizon = 0;
  Verdict verdict = Verdict::indeterminate;
  std::vector<std::pair<std::string, double>> witness;
  std::string note;

  ConditionReport() = default;
  ConditionReport(std::string name, long n) : condition_name(std::move(name)), horizon(n) {}

  ConditionReport& with(std::string key, double value);
  bool has(std::string_view key) const;
  double at(std::string_view key) const;
};

/// An internal identity failed; the simulation state can no longer be trusted.
class ConsistencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A scripted stream or table was asked for more entries than it holds.
class HorizonOverrun : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace narendra
