#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "tickrand/error.hpp"

namespace tickrand::stats {

enum class Tail { One, Two };
enum class Decision { Pass, Reject, Skipped };
enum class Category { Frequency, Pattern, EntropyComplexity, Spectral, RandomWalk };

inline constexpr double kDefaultAlpha = 0.01;

inline std::string to_string(Tail t) { return t == Tail::One ? "one" : "two"; }

inline std::string to_string(Decision d) {
  switch (d) {
    case Decision::Pass: return "pass";
    case Decision::Reject: return "reject";
    case Decision::Skipped: return "skip";
  }
  return "?";
}

inline std::string to_string(Category c) {
  switch (c) {
    case Category::Frequency: return "frequency";
    case Category::Pattern: return "pattern";
    case Category::EntropyComplexity: return "entropy-complexity";
    case Category::Spectral: return "spectral";
    case Category::RandomWalk: return "random-walk";
  }
  return "?";
}

inline Tail parse_tail(const std::string& s) {
  if (s == "one") return Tail::One;
  if (s == "two") return Tail::Two;
  throw RegistryError("unknown tail '" + s + "'");
}

inline Category parse_category(const std::string& s) {
  for (auto c : {Category::Frequency, Category::Pattern, Category::EntropyComplexity, Category::Spectral,
                 Category::RandomWalk})
    if (to_string(c) == s) return c;
  throw RegistryError("unknown category '" + s + "'");
}

inline void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
}

/// One-tailed: pass iff p >= alpha. Two-tailed: pass iff alpha/2 <= p <= 1 - alpha/2.
inline Decision decide(double p, Tail tail, double alpha = kDefaultAlpha) {
  check_alpha(alpha);
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("p-value outside [0, 1]");
  if (tail == Tail::One) return p >= alpha ? Decision::Pass : Decision::Reject;
  return (p >= alpha / 2 && p <= 1.0 - alpha / 2) ? Decision::Pass : Decision::Reject;
}

/// What a kernel computes: one statistic and its p-value(s), plus anything worth reporting.
struct Outcome {
  double statistic = 0.0;
  std::vector<double> p_values;
  std::map<std::string, double> diagnostics;
};

struct TestResult {
  std::string spec_id;
  double statistic = 0.0;
  std::vector<double> p_values;
  Decision decision = Decision::Skipped;
  std::size_t n_bits = 0;
  std::map<std::string, double> diagnostics;
  std::string skip_reason;

  bool skipped() const noexcept { return decision == Decision::Skipped; }

  /// The p-value the decision was made on (smallest reported); NaN when skipped.
  double p_value() const {
    if (p_values.empty()) return std::nan("");
    return *std::min_element(p_values.begin(), p_values.end());
  }
};

}  // namespace tickrand::stats
