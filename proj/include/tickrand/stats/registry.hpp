#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tickrand/bitstring.hpp"
#include "tickrand/error.hpp"
#include "tickrand/stats/entropy.hpp"
#include "tickrand/stats/nist.hpp"
#include "tickrand/stats/result.hpp"
#include "tickrand/stats/testu01.hpp"

namespace tickrand::stats {

/// A registered test: which kernel, with which parameters, how to decide, and how many bits it needs.
struct TestSpec {
  std::string id;
  std::string kind;
  Category category = Category::Frequency;
  std::map<std::string, double> params;
  Tail tail = Tail::One;
  std::size_t min_length = 1;

  double param(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) throw RegistryError("test '" + id + "' lacks parameter '" + name + "'");
    return it->second;
  }
  std::size_t uparam(const std::string& name) const { return static_cast<std::size_t>(param(name)); }
  double param_or(const std::string& name, double fallback) const {
    auto it = params.find(name);
    return it == params.end() ? fallback : it->second;
  }

  friend bool operator==(const TestSpec&, const TestSpec&) = default;
};

inline void to_json(nlohmann::json& j, const TestSpec& s) {
  j = nlohmann::json{{"id", s.id},
                     {"kind", s.kind},
                     {"category", to_string(s.category)},
                     {"params", s.params},
                     {"tail", to_string(s.tail)},
                     {"min_length", s.min_length}};
}

inline void from_json(const nlohmann::json& j, TestSpec& s) {
  try {
    s.id = j.at("id").get<std::string>();
    s.kind = j.at("kind").get<std::string>();
    s.category = parse_category(j.at("category").get<std::string>());
    s.params = j.value("params", std::map<std::string, double>{});
    s.tail = parse_tail(j.at("tail").get<std::string>());
    s.min_length = j.at("min_length").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw RegistryError(std::string("malformed test spec: ") + e.what());
  }
  if (s.min_length == 0) throw RegistryError("test '" + s.id + "': min_length must be positive");
}

namespace detail {

using Kernel = std::function<Outcome(const TestSpec&, std::span<const std::uint8_t>, double alpha)>;

inline const std::map<std::string, Kernel>& kernels() {
  static const std::map<std::string, Kernel> table = {
      {"frequency", [](const TestSpec& s, auto b, double a) { return nist::frequency(b, s.uparam("t"), a); }},
      {"block_frequency",
       [](const TestSpec& s, auto b, double a) { return nist::block_frequency(b, s.uparam("t"), s.uparam("M"), a); }},
      {"cumulative_sums", [](const TestSpec& s, auto b, double a) { return nist::cumulative_sums(b, s.uparam("t"), a); }},
      {"runs", [](const TestSpec& s, auto b, double a) { return nist::runs(b, s.uparam("t"), a); }},
      {"longest_run",
       [](const TestSpec& s, auto b, double a) { return nist::longest_run(b, s.uparam("t"), s.uparam("M"), a); }},
      {"fft", [](const TestSpec& s, auto b, double a) { return nist::fft(b, s.uparam("t"), a); }},
      {"non_overlapping_template",
       [](const TestSpec& s, auto b, double a) {
         return nist::non_overlapping_template(b, s.uparam("t"), static_cast<unsigned>(s.uparam("m")),
                                               s.uparam("blocks"), a);
       }},
      {"approximate_entropy",
       [](const TestSpec& s, auto b, double a) {
         return nist::approximate_entropy(b, s.uparam("t"), static_cast<unsigned>(s.uparam("m")), a);
       }},
      {"serial",
       [](const TestSpec& s, auto b, double a) {
         return nist::serial(b, s.uparam("t"), static_cast<unsigned>(s.uparam("m")), a);
       }},
      {"multinomial_bits_overlapping",
       [](const TestSpec& s, auto b, double) {
         return u01::multinomial_bits_overlapping(b, static_cast<unsigned>(s.uparam("L")));
       }},
      {"hamming_weight",
       [](const TestSpec& s, auto b, double) { return u01::hamming_weight(b, static_cast<unsigned>(s.uparam("L"))); }},
      {"hamming_correlation",
       [](const TestSpec& s, auto b, double) {
         return u01::hamming_correlation(b, static_cast<unsigned>(s.uparam("L")));
       }},
      {"hamming_independence",
       [](const TestSpec& s, auto b, double) {
         return u01::hamming_independence(b, static_cast<unsigned>(s.uparam("L")));
       }},
      {"autocorrelation", [](const TestSpec& s, auto b, double) { return u01::autocorrelation(b, s.uparam("d")); }},
      {"longest_head_run", [](const TestSpec&, auto b, double) { return u01::longest_head_run(b); }},
      {"run", [](const TestSpec&, auto b, double) { return u01::runs_distribution(b); }},
      {"shannon_entropy",
       [](const TestSpec& s, auto b, double) {
         return shannon_entropy(b, static_cast<unsigned>(s.param_or("k", 0)));
       }},
      {"kl", [](const TestSpec& s, auto b, double) { return kl_independence(b, static_cast<unsigned>(s.param_or("k", 0))); }},
      {"arithmetic_mean", [](const TestSpec&, auto b, double) { return arithmetic_mean(b); }},
  };
  return table;
}

}  // namespace detail

/// Ordered collection of test specs with unique ids.
class Registry {
 public:
  Registry() = default;
  explicit Registry(std::vector<TestSpec> specs) : specs_(std::move(specs)) {
    std::set<std::string> seen;
    for (const auto& s : specs_) {
      if (!seen.insert(s.id).second) throw RegistryError("duplicate test id '" + s.id + "'");
      if (!detail::kernels().contains(s.kind)) throw RegistryError("test '" + s.id + "' has unknown kind '" + s.kind + "'");
    }
  }

  const std::vector<TestSpec>& specs() const noexcept { return specs_; }
  std::size_t size() const noexcept { return specs_.size(); }
  bool contains(const std::string& id) const { return find_ptr(id) != nullptr; }

  const TestSpec& find(const std::string& id) const {
    if (auto p = find_ptr(id)) return *p;
    throw RegistryError("unknown test id '" + id + "'");
  }

  /// Keeps only the listed ids, in registry order.
  Registry only(const std::vector<std::string>& ids) const {
    for (const auto& id : ids) find(id);
    std::vector<TestSpec> out;
    for (const auto& s : specs_)
      if (std::find(ids.begin(), ids.end(), s.id) != ids.end()) out.push_back(s);
    return Registry(std::move(out));
  }

  Registry without(const std::set<std::string>& ids) const {
    std::vector<TestSpec> out;
    for (const auto& s : specs_)
      if (!ids.contains(s.id)) out.push_back(s);
    return Registry(std::move(out));
  }

  nlohmann::json to_json() const { return nlohmann::json(specs_); }

  static Registry from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw RegistryError("test catalog must be a JSON array");
    return Registry(j.get<std::vector<TestSpec>>());
  }

 private:
  const TestSpec* find_ptr(const std::string& id) const {
    for (const auto& s : specs_)
      if (s.id == id) return &s;
    return nullptr;
  }

  std::vector<TestSpec> specs_;
};

/// The in-scope battery with its default parameters.
inline const Registry& default_registry() {
  static const Registry reg = [] {
    using C = Category;
    std::vector<TestSpec> v;
    auto add = [&](std::string id, std::string kind, C cat, std::map<std::string, double> params, Tail tail,
                   std::size_t min_len) {
      v.push_back({std::move(id), std::move(kind), cat, std::move(params), tail, min_len});
    };
    // Substring tests.
    add("Frequency", "frequency", C::Frequency, {{"t", 128}}, Tail::One, 512);
    add("BlockFrequency", "block_frequency", C::Frequency, {{"t", 128}, {"M", 20}}, Tail::One, 512);
    add("CumulativeSums", "cumulative_sums", C::RandomWalk, {{"t", 128}}, Tail::One, 512);
    add("Runs", "runs", C::Pattern, {{"t", 128}}, Tail::One, 512);
    add("LongestRun", "longest_run", C::Pattern, {{"t", 128}, {"M", 8}}, Tail::One, 512);
    add("FFT", "fft", C::Spectral, {{"t", 1000}}, Tail::One, 1000);
    add("NonOverlappingTemplate", "non_overlapping_template", C::Pattern, {{"t", 1000}, {"m", 9}, {"blocks", 8}},
        Tail::One, 1000);
    add("ApproximateEntropy", "approximate_entropy", C::EntropyComplexity, {{"t", 128}, {"m", 5}}, Tail::One, 512);
    add("Serial", "serial", C::Pattern, {{"t", 128}, {"m", 2}}, Tail::One, 512);
    // Whole-string tests.
    // Minimum lengths beyond 500 bits keep the asymptotic null laws usable: at least 2^(L−4)
    // bits for the overlapping pattern counts, 64 blocks for the weight correlation, 20 block
    // pairs for the weight independence table.
    for (int l : {2, 4, 8, 16})
      add("MultinomialBitsOverlapping_L" + std::to_string(l), "multinomial_bits_overlapping", C::Frequency,
          {{"L", l}}, Tail::Two, static_cast<std::size_t>(std::max(500, 1 << (l - 4 > 0 ? l - 4 : 0))));
    add("HammingWeight_L32", "hamming_weight", C::Frequency, {{"L", 32}}, Tail::Two, 500);
    for (int l : {32, 64, 128})
      add("HammingCorrelation_L" + std::to_string(l), "hamming_correlation", C::Pattern, {{"L", l}}, Tail::Two,
          static_cast<std::size_t>(64 * l));
    for (int l : {16, 32, 64})
      add("HammingIndependence_L" + std::to_string(l), "hamming_independence", C::Pattern, {{"L", l}}, Tail::Two,
          static_cast<std::size_t>(std::max(500, 40 * l)));
    for (int d : {1, 2})
      add("AutoCorrelation_d" + std::to_string(d), "autocorrelation", C::Pattern, {{"d", d}}, Tail::Two, 500);
    add("LongestHeadRun", "longest_head_run", C::Pattern, {}, Tail::Two, 500);
    add("Run", "run", C::Pattern, {}, Tail::Two, 500);
    // Entropy tests and the balance test.
    add("ShannonEntropy", "shannon_entropy", C::EntropyComplexity, {}, Tail::One, 16);
    add("KL", "kl", C::EntropyComplexity, {}, Tail::One, 16);
    add("ArithmeticMean", "arithmetic_mean", C::Frequency, {}, Tail::One, 1);
    return Registry(std::move(v));
  }();
  return reg;
}

inline TestResult skipped_result(const TestSpec& spec, std::size_t n_bits, std::string reason) {
  TestResult r;
  r.spec_id = spec.id;
  r.decision = Decision::Skipped;
  r.n_bits = n_bits;
  r.skip_reason = std::move(reason);
  return r;
}

/// Runs one test on unpacked bits. Strings below the spec's min_length, or too short for the
/// kernel's own structure, give a skipped result rather than a rejection.
inline TestResult run_test(const TestSpec& spec, std::span<const std::uint8_t> bits, double alpha = kDefaultAlpha) {
  check_alpha(alpha);
  const auto it = detail::kernels().find(spec.kind);
  if (it == detail::kernels().end()) throw RegistryError("unknown test kind '" + spec.kind + "'");
  if (bits.size() < spec.min_length)
    return skipped_result(spec, bits.size(),
                          "length " + std::to_string(bits.size()) + " below minimum " + std::to_string(spec.min_length));
  Outcome out;
  try {
    out = it->second(spec, bits, alpha);
  } catch (const LengthError& e) {
    return skipped_result(spec, bits.size(), e.what());
  }
  TestResult r;
  r.spec_id = spec.id;
  r.statistic = out.statistic;
  r.p_values = std::move(out.p_values);
  for (double p : r.p_values)
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("test '" + spec.id + "' produced p-value outside [0, 1]");
  r.decision = decide(r.p_value(), spec.tail, alpha);
  r.n_bits = bits.size();
  r.diagnostics = std::move(out.diagnostics);
  return r;
}

inline TestResult run_test(const TestSpec& spec, const BitString& bits, double alpha = kDefaultAlpha) {
  const auto unpacked = bits.unpack();
  return run_test(spec, std::span<const std::uint8_t>(unpacked), alpha);
}

inline TestResult run_test(const std::string& id, const BitString& bits, double alpha = kDefaultAlpha) {
  return run_test(default_registry().find(id), bits, alpha);
}

/// One result per spec, in spec order.
inline std::vector<TestResult> run_battery(std::span<const std::uint8_t> bits, std::span<const TestSpec> specs,
                                           double alpha = kDefaultAlpha) {
  std::vector<TestResult> out;
  out.reserve(specs.size());
  for (const auto& s : specs) out.push_back(run_test(s, bits, alpha));
  return out;
}

inline std::vector<TestResult> run_battery(const BitString& bits, std::span<const TestSpec> specs,
                                           double alpha = kDefaultAlpha) {
  const auto unpacked = bits.unpack();
  return run_battery(std::span<const std::uint8_t>(unpacked), specs, alpha);
}

inline std::vector<TestResult> run_battery(const BitString& bits, const Registry& reg, double alpha = kDefaultAlpha) {
  return run_battery(bits, std::span<const TestSpec>(reg.specs()), alpha);
}

// Convenience wrappers named after the individual tests.

inline TestResult shannon_entropy_test(const BitString& bits, double alpha = kDefaultAlpha) {
  return run_test("ShannonEntropy", bits, alpha);
}
inline TestResult kl_independence_test(const BitString& bits, double alpha = kDefaultAlpha) {
  return run_test("KL", bits, alpha);
}
inline TestResult arithmetic_mean_test(const BitString& bits, double alpha = kDefaultAlpha) {
  return run_test("ArithmeticMean", bits, alpha);
}

}  // namespace tickrand::stats
