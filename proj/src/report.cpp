#include "narendra/report.hpp"

#include <algorithm>

namespace narendra {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "pass";
    case Verdict::fail:
      return "fail";
    case Verdict::indeterminate:
      return "indeterminate";
  }
  return "indeterminate";
}

ConditionReport& ConditionReport::with(std::string key, double value) {
  witness.emplace_back(std::move(key), value);
  return *this;
}

bool ConditionReport::has(std::string_view key) const {
  return std::any_of(witness.begin(), witness.end(),
                     [&](const auto& kv) { return kv.first == key; });
}

double ConditionReport::at(std::string_view key) const {
  for (const auto& [k, v] : witness)
    if (k == key) return v;
  throw std::out_of_range("no witness entry '" + std::string(key) + "' in " + condition_name);
}

}  // namespace narendra
