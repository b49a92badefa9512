#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tickrand/bitcore.hpp"
#include "tickrand/error.hpp"
#include "tickrand/parallel.hpp"
#include "tickrand/rngsrc.hpp"
#include "tickrand/stats/registry.hpp"

namespace tickrand {

inline const std::vector<std::size_t> kCanonicalLengths = {50000, 100000, 500000, 1000000};

enum class Verdict { Valid, Excluded };

/// Why a (test, length) pair is excluded.
enum class ExclusionReason { None, FailureRate, NeverRan };

inline std::string to_string(Verdict v) { return v == Verdict::Valid ? "valid" : "excluded"; }

inline std::string to_string(ExclusionReason r) {
  switch (r) {
    case ExclusionReason::None: return "none";
    case ExclusionReason::FailureRate: return "failure-rate";
    case ExclusionReason::NeverRan: return "never-ran";
  }
  return "?";
}

struct FailureCount {
  std::size_t failures = 0;
  std::size_t total = 0;  // non-skipped evaluations
  double fraction() const { return total == 0 ? 0.0 : static_cast<double>(failures) / static_cast<double>(total); }
};

struct SanityEntry {
  std::string test_id;
  std::size_t length = 0;
  FailureCount pooled;
  std::map<std::string, FailureCount> per_generator;
  double fraction = 0.0;  // the fraction the verdict was based on
  Verdict verdict = Verdict::Valid;
  ExclusionReason reason = ExclusionReason::None;
};

struct SanityOptions {
  std::vector<std::size_t> lengths = kCanonicalLengths;
  std::size_t max_level = 100;
  double alpha = stats::kDefaultAlpha;
  double threshold = 0.02;
  bool worst_case = false;  // judge each test by its worst generator instead of the pooled count
  unsigned jobs = 1;
};

struct SanityReport {
  double alpha = stats::kDefaultAlpha;
  double threshold = 0.02;
  bool worst_case = false;
  std::vector<std::size_t> lengths;
  std::vector<std::string> generators;
  std::vector<SanityEntry> entries;  // ordered by length, then registry order

  const SanityEntry& entry(const std::string& test_id, std::size_t length) const {
    for (const auto& e : entries)
      if (e.test_id == test_id && e.length == length) return e;
    throw Error("sanity report has no entry for " + test_id + " at length " + std::to_string(length));
  }

  bool covers(std::size_t length) const { return std::find(lengths.begin(), lengths.end(), length) != lengths.end(); }

  std::set<std::string> excluded_at(std::size_t length) const {
    std::set<std::string> out;
    for (const auto& e : entries)
      if (e.length == length && e.verdict == Verdict::Excluded) out.insert(e.test_id);
    return out;
  }
};

/// Strictly above the threshold is excluded; a test that never produced a verdict is excluded too.
inline void assign_verdict(SanityEntry& e, double threshold, bool worst_case) {
  if (e.pooled.total == 0) {
    e.fraction = 0.0;
    e.verdict = Verdict::Excluded;
    e.reason = ExclusionReason::NeverRan;
    return;
  }
  e.fraction = e.pooled.fraction();
  if (worst_case)
    for (const auto& [name, c] : e.per_generator)
      if (c.total > 0) e.fraction = std::max(e.fraction, c.fraction());
  // The tolerance absorbs rounding in k/n so that exactly-at-threshold counts stay valid.
  const bool over = e.fraction > threshold + 1e-12;
  e.verdict = over ? Verdict::Excluded : Verdict::Valid;
  e.reason = over ? ExclusionReason::FailureRate : ExclusionReason::None;
}

/// Failure counts of every test over every cell of one aggregation grid.
inline std::vector<FailureCount> grid_failures(const AggregationGrid& grid, const stats::Registry& reg, double alpha,
                                               unsigned jobs) {
  const std::size_t cells = grid.size();
  std::vector<std::vector<stats::Decision>> decisions(cells);
  parallel_for(cells, jobs, [&](std::size_t c) {
    const auto bits = grid.cells()[c].unpack();
    auto& row = decisions[c];
    row.reserve(reg.size());
    for (const auto& spec : reg.specs()) row.push_back(stats::run_test(spec, std::span<const std::uint8_t>(bits), alpha).decision);
  });
  std::vector<FailureCount> counts(reg.size());
  for (const auto& row : decisions)
    for (std::size_t t = 0; t < row.size(); ++t) {
      if (row[t] == stats::Decision::Skipped) continue;
      ++counts[t].total;
      if (row[t] == stats::Decision::Reject) ++counts[t].failures;
    }
  return counts;
}

/// For each generator and length: the full aggregation grid of that many values is tested cell by
/// cell, failures pooled per (test, length) across generators, and verdicts assigned.
inline SanityReport run_sanity(const std::vector<GeneratorSpec>& generators, const SanityOptions& opt,
                               const stats::Registry& reg = stats::default_registry()) {
  if (generators.empty()) throw Error("sanity check needs at least one generator");
  if (opt.lengths.empty()) throw Error("sanity check needs at least one length");
  stats::check_alpha(opt.alpha);
  SanityReport rep;
  rep.alpha = opt.alpha;
  rep.threshold = opt.threshold;
  rep.worst_case = opt.worst_case;
  rep.lengths = opt.lengths;
  for (const auto& g : generators) rep.generators.push_back(g.name());

  for (std::size_t length : opt.lengths) {
    std::vector<SanityEntry> entries(reg.size());
    for (std::size_t t = 0; t < reg.size(); ++t) {
      entries[t].test_id = reg.specs()[t].id;
      entries[t].length = length;
    }
    for (const auto& g : generators) {
      std::vector<std::int64_t> values;
      try {
        values = generator_values(g, length);
      } catch (const LengthError& e) {
        throw Error("generator " + g.name() + " too short for length " + std::to_string(length) + ": " + e.what());
      }
      const AggregationGrid grid = build_grid(values, opt.max_level, RatioDirection::Canonical, g.name());
      const auto counts = grid_failures(grid, reg, opt.alpha, opt.jobs);
      for (std::size_t t = 0; t < reg.size(); ++t) {
        entries[t].per_generator[g.name()] = counts[t];
        entries[t].pooled.failures += counts[t].failures;
        entries[t].pooled.total += counts[t].total;
      }
    }
    for (auto& e : entries) {
      assign_verdict(e, opt.threshold, opt.worst_case);
      rep.entries.push_back(std::move(e));
    }
  }
  return rep;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_sanity_csv(std::ostream& out, const SanityReport& rep) {
  out << "test_id,length,failures,total,fraction,verdict\n";
  for (const auto& e : rep.entries)
    out << e.test_id << ',' << e.length << ',' << e.pooled.failures << ',' << e.pooled.total << ','
        << format_double(e.fraction) << ',' << to_string(e.verdict) << '\n';
}

/// The exclusion file consumed by the pipeline.
inline nlohmann::json exclusions_json(const SanityReport& rep) {
  nlohmann::json excluded = nlohmann::json::object();
  nlohmann::json reasons = nlohmann::json::object();
  for (std::size_t len : rep.lengths) {
    excluded[std::to_string(len)] = nlohmann::json::array();
    reasons[std::to_string(len)] = nlohmann::json::object();
  }
  for (const auto& e : rep.entries) {
    if (e.verdict != Verdict::Excluded) continue;
    excluded[std::to_string(e.length)].push_back(e.test_id);
    reasons[std::to_string(e.length)][e.test_id] = to_string(e.reason);
  }
  return {{"alpha", rep.alpha},     {"threshold", rep.threshold}, {"mode", rep.worst_case ? "worst-case" : "pooled"},
          {"lengths", rep.lengths}, {"generators", rep.generators}, {"excluded", excluded},
          {"reasons", reasons}};
}

/// Excluded test ids per canonical length, as read back from an exclusion file.
struct Exclusions {
  double alpha = stats::kDefaultAlpha;
  std::map<std::size_t, std::set<std::string>> excluded;

  static Exclusions from_report(const SanityReport& rep) {
    Exclusions ex;
    ex.alpha = rep.alpha;
    for (std::size_t len : rep.lengths) ex.excluded[len] = rep.excluded_at(len);
    return ex;
  }

  static Exclusions from_json(const nlohmann::json& j) {
    Exclusions ex;
    try {
      ex.alpha = j.value("alpha", stats::kDefaultAlpha);
      for (const auto& [len, ids] : j.at("excluded").items()) {
        auto& set = ex.excluded[std::stoul(len)];
        for (const auto& id : ids) set.insert(id.get<std::string>());
      }
    } catch (const std::exception& e) {
      throw Error(std::string("malformed exclusion file: ") + e.what());
    }
    return ex;
  }

  static Exclusions load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error("exclusion file " + path.string() + " is not JSON: " + e.what());
    }
    return from_json(j);
  }
};

/// Ticker → canonical length class.
using LengthClass = std::map<std::string, std::size_t>;

/// The largest canonical length not above `bits`, or the smallest when every length is above it.
inline std::size_t auto_length_class(std::size_t bits, const std::vector<std::size_t>& lengths = kCanonicalLengths) {
  if (lengths.empty()) throw Error("no canonical lengths");
  std::size_t best = *std::min_element(lengths.begin(), lengths.end());
  for (auto len : lengths)
    if (len <= bits) best = std::max(best, len);
  return best;
}

/// The registry with the tests excluded at the ticker's length class removed.
inline stats::Registry apply_exclusions(const Exclusions& ex, const LengthClass& classes, const std::string& ticker,
                                        const stats::Registry& reg = stats::default_registry()) {
  auto it = classes.find(ticker);
  if (it == classes.end()) throw Error("ticker '" + ticker + "' has no length class");
  auto cov = ex.excluded.find(it->second);
  if (cov == ex.excluded.end())
    throw Error("exclusions do not cover length " + std::to_string(it->second) + " of ticker '" + ticker + "'");
  return reg.without(cov->second);
}

inline stats::Registry apply_exclusions(const SanityReport& rep, const LengthClass& classes, const std::string& ticker,
                                        const stats::Registry& reg = stats::default_registry()) {
  return apply_exclusions(Exclusions::from_report(rep), classes, ticker, reg);
}

}  // namespace tickrand
