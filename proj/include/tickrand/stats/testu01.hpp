#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tickrand/error.hpp"
#include "tickrand/special.hpp"
#include "tickrand/stats/result.hpp"

// Whole-string tests modelled on the bit-oriented tests of TestU01's Alphabit and Rabbit
// batteries. Reported p-values are upper tails (P(statistic >= observed)); callers decide
// two-tailed.

namespace tickrand::stats::u01 {

using Bits = std::span<const std::uint8_t>;

namespace detail {

inline std::vector<unsigned> block_weights(Bits bits, std::size_t len) {
  const std::size_t blocks = bits.size() / len;
  std::vector<unsigned> w(blocks, 0);
  for (std::size_t j = 0; j < blocks; ++j)
    for (std::size_t i = 0; i < len; ++i) w[j] += bits[j * len + i];
  return w;
}

inline std::vector<double> binomial_half(std::size_t n) {
  std::vector<double> p(n + 1);
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k <= n; ++k)
    p[k] = std::exp(special::log_gamma(nd + 1) - special::log_gamma(static_cast<double>(k) + 1) -
                    special::log_gamma(nd - static_cast<double>(k) + 1) - nd * std::numbers::ln2);
  return p;
}

// Cyclic overlapping counts of L-bit patterns over the whole string.
inline std::vector<std::uint64_t> cyclic_counts(Bits bits, unsigned len) {
  std::vector<std::uint64_t> counts(std::size_t{1} << len, 0);
  const std::size_t n = bits.size();
  const std::uint64_t mask = (std::uint64_t{1} << len) - 1;
  std::uint64_t w = 0;
  for (unsigned i = 0; i + 1 < len; ++i) w = (w << 1) | bits[i % n];
  for (std::size_t i = 0; i < n; ++i) {
    w = ((w << 1) | bits[(i + len - 1) % n]) & mask;
    ++counts[w];
  }
  return counts;
}

inline double pearson_uniform(const std::vector<std::uint64_t>& counts, double n) {
  const double e = n / static_cast<double>(counts.size());
  double chi = 0.0;
  for (auto c : counts) chi += (static_cast<double>(c) - e) * (static_cast<double>(c) - e);
  return chi / e;
}

}  // namespace detail

/// Overlapping L-bit pattern counts (cyclic): Δ = X²_L − X²_(L−1), χ² with 2^(L−1) degrees of freedom.
inline Outcome multinomial_bits_overlapping(Bits bits, unsigned len) {
  if (len < 1 || len > 24) throw DomainError("pattern length must be in [1, 24]");
  const std::size_t n = bits.size();
  if (n < len) throw LengthError("string shorter than the pattern length");
  const double nd = static_cast<double>(n);
  const double x_l = detail::pearson_uniform(detail::cyclic_counts(bits, len), nd);
  const double x_prev = len > 1 ? detail::pearson_uniform(detail::cyclic_counts(bits, len - 1), nd) : 0.0;
  Outcome out;
  out.statistic = x_l - x_prev;
  out.p_values = {special::chi2_sf(std::max(0.0, out.statistic), std::ldexp(1.0, static_cast<int>(len) - 1))};
  out.diagnostics = {{"df", std::ldexp(1.0, static_cast<int>(len) - 1)}};
  return out;
}

/// Weights of non-overlapping L-bit blocks: Σ (X − L/2)² / (L/4) over B blocks, mean B,
/// variance B·(2 − 2/L), matched to a scaled χ².
inline Outcome hamming_weight(Bits bits, unsigned len) {
  const auto w = detail::block_weights(bits, len);
  if (w.empty()) throw LengthError("string shorter than one block");
  const double half = len / 2.0, quarter = len / 4.0;
  double stat = 0.0;
  for (auto x : w) stat += (x - half) * (x - half) / quarter;
  const double b = static_cast<double>(w.size());
  Outcome out;
  out.statistic = stat;
  out.p_values = {special::scaled_chi2_sf(stat, b, b * (2.0 - 2.0 / len))};
  out.diagnostics = {{"blocks", b}};
  return out;
}

/// Lag-one correlation of successive block weights: z = ρ̂·√(B − 1), upper normal tail.
inline Outcome hamming_correlation(Bits bits, unsigned len) {
  const auto w = detail::block_weights(bits, len);
  if (w.size() < 2) throw LengthError("need at least two blocks");
  const double half = len / 2.0;
  double sum = 0.0;
  for (std::size_t j = 0; j + 1 < w.size(); ++j) sum += (w[j] - half) * (w[j + 1] - half);
  const double b1 = static_cast<double>(w.size() - 1);
  const double rho = 4.0 / (b1 * len) * sum;
  Outcome out;
  out.statistic = rho * std::sqrt(b1);
  out.p_values = {special::normal_sf(out.statistic)};
  out.diagnostics = {{"rho", rho}};
  return out;
}

/// Independence of the weights of adjacent L-bit block pairs. Weight values are grouped into
/// classes of null probability at least √(5 / pairs) so every cell expects five or more pairs;
/// Pearson χ² with K² − 1 degrees of freedom for K classes.
inline Outcome hamming_independence(Bits bits, unsigned len) {
  const auto w = detail::block_weights(bits, len);
  const std::size_t pairs = w.size() / 2;
  if (pairs < 20) throw LengthError("need at least 20 block pairs");
  const auto probs = detail::binomial_half(len);
  const double threshold = std::sqrt(5.0 / static_cast<double>(pairs));
  std::vector<unsigned> cls(len + 1);
  std::vector<double> class_p;
  double acc = 0.0;
  for (unsigned v = 0; v <= len; ++v) {
    if (class_p.empty() || acc >= threshold) {
      if (!class_p.empty()) class_p.back() = acc;
      class_p.push_back(0.0);
      acc = 0.0;
    }
    acc += probs[v];
    cls[v] = static_cast<unsigned>(class_p.size() - 1);
  }
  class_p.back() = acc;
  if (class_p.size() > 1 && acc < threshold) {
    // Fold an undersized last class into its neighbour.
    const unsigned last = static_cast<unsigned>(class_p.size() - 1);
    for (auto& c : cls)
      if (c == last) c = last - 1;
    class_p[last - 1] += acc;
    class_p.pop_back();
  }
  const std::size_t k = class_p.size();
  if (k < 2) throw LengthError("too few pairs to form two weight classes");
  std::vector<double> table(k * k, 0.0);
  for (std::size_t i = 0; i < pairs; ++i) table[cls[w[2 * i]] * k + cls[w[2 * i + 1]]] += 1.0;
  const double np = static_cast<double>(pairs);
  double chi = 0.0;
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b) {
      const double e = np * class_p[a] * class_p[b];
      chi += (table[a * k + b] - e) * (table[a * k + b] - e) / e;
    }
  const double df = static_cast<double>(k * k - 1);
  Outcome out;
  out.statistic = chi;
  out.p_values = {special::chi2_sf(chi, df)};
  out.diagnostics = {{"classes", static_cast<double>(k)}, {"df", df}};
  return out;
}

/// Disagreements between bits d apart: A = Σ b_i ⊕ b_(i+d), Z = (2A − (n − d)) / √(n − d), upper tail.
inline Outcome autocorrelation(Bits bits, std::size_t lag) {
  const std::size_t n = bits.size();
  if (lag < 1 || n <= lag) throw LengthError("string not longer than the lag");
  std::size_t a = 0;
  for (std::size_t i = 0; i + lag < n; ++i) a += bits[i] != bits[i + lag];
  const double m = static_cast<double>(n - lag);
  Outcome out;
  out.statistic = (2.0 * static_cast<double>(a) - m) / std::sqrt(m);
  out.p_values = {special::normal_sf(out.statistic)};
  out.diagnostics = {{"disagreements", static_cast<double>(a)}};
  return out;
}

/// P(longest run of ones in n fair bits >= r), exactly.
inline double longest_head_run_sf(std::size_t n, std::size_t r) {
  if (r == 0) return 1.0;
  if (r > n) return 0.0;
  // q[i] = P(some run >= r within the first i bits). A first such run ending at i needs bits
  // i − r + 1..i set, bit i − r clear (unless i == r) and no run in the first i − r − 1 bits.
  std::vector<double> q(n + 1, 0.0);
  const double head = std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(r, 2000)));
  q[r] = head;
  for (std::size_t i = r + 1; i <= n; ++i) q[i] = q[i - 1] + (1.0 - q[i - r - 1]) * head * 0.5;
  return std::min(1.0, q[n]);
}

inline Outcome longest_head_run(Bits bits) {
  if (bits.empty()) throw LengthError("empty string");
  std::size_t best = 0, run = 0;
  for (auto b : bits) {
    run = b ? run + 1 : 0;
    best = std::max(best, run);
  }
  // The statistic is discrete, so "large" is judged by P(R >= r) and "small" by P(R <= r);
  // reporting 1 − P(R <= r) on the small side keeps both ends of a two-tailed decision at level.
  const double upper = longest_head_run_sf(bits.size(), best);
  Outcome out;
  out.statistic = static_cast<double>(best);
  out.p_values = {upper < 0.5 ? upper : longest_head_run_sf(bits.size(), best + 1)};
  return out;
}

/// Lengths of completed runs of ones and of zeros (the final run is left out), each compared with
/// the geometric law 2^−i by Pearson χ²; categories 1..K−1 and ≥K with K the largest keeping
/// five expected runs in the last category. Degrees of freedom 2(K − 1).
inline Outcome runs_distribution(Bits bits) {
  const std::size_t n = bits.size();
  if (n < 2) throw LengthError("need at least two bits");
  std::vector<std::size_t> lengths[2];
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (bits[i] != bits[i - 1]) {
      lengths[bits[i - 1]].push_back(i - start);
      start = i;
    }
  double chi = 0.0;
  double df = 0.0;
  std::size_t categories[2] = {0, 0};
  for (int sym = 0; sym < 2; ++sym) {
    const double runs = static_cast<double>(lengths[sym].size());
    // K with runs·2^−(K−1) >= 5.
    std::size_t k = 1;
    while (runs * std::ldexp(1.0, -static_cast<int>(k)) >= 5.0) ++k;
    categories[sym] = k;
    if (k < 2) continue;
    std::vector<double> obs(k, 0.0);
    for (auto len : lengths[sym]) obs[std::min(len, k) - 1] += 1.0;
    for (std::size_t i = 1; i <= k; ++i) {
      const double p = i < k ? std::ldexp(1.0, -static_cast<int>(i)) : std::ldexp(1.0, -static_cast<int>(k - 1));
      const double e = runs * p;
      chi += (obs[i - 1] - e) * (obs[i - 1] - e) / e;
    }
    df += static_cast<double>(k - 1);
  }
  if (df == 0.0) throw LengthError("too few runs for the run-length test");
  Outcome out;
  out.statistic = chi;
  out.p_values = {special::chi2_sf(chi, df)};
  out.diagnostics = {{"df", df}, {"categories_ones", static_cast<double>(categories[1])},
                     {"categories_zeros", static_cast<double>(categories[0])}};
  return out;
}

}  // namespace tickrand::stats::u01
