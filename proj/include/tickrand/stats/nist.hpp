#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tickrand/error.hpp"
#include "tickrand/fft.hpp"
#include "tickrand/parallel.hpp"
#include "tickrand/special.hpp"
#include "tickrand/stats/result.hpp"

// Tests from the NIST SP 800-22 suite. Each test has a per-substring function that follows the
// published formulas, and a battery function that splits a long string into substrings of
// length t. The battery's reported p-value pools the per-substring statistics against their
// exact (or, for the spectral test, approximate) null moments; the stock two-level summary
// (pass proportion and p-value uniformity) is kept in the diagnostics.

namespace tickrand::stats::nist {

using Bits = std::span<const std::uint8_t>;

// ---------------------------------------------------------------------------------------------
// Shared helpers

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

inline std::size_t substring_count(std::size_t n, std::size_t t) {
  if (t == 0) throw DomainError("substring length must be positive");
  const std::size_t s = n / t;
  if (s == 0) throw LengthError("string shorter than one substring of length " + std::to_string(t));
  return s;
}

/// Stock battery's second-level check: χ² over ten equal p-value bins, 9 degrees of freedom.
inline double uniformity_p(std::span<const double> ps) {
  if (ps.empty()) return std::nan("");
  std::array<double, 10> bins{};
  for (double p : ps) bins[std::min(9, static_cast<int>(p * 10.0))] += 1.0;
  const double expected = static_cast<double>(ps.size()) / 10.0;
  double chi = 0.0;
  for (double b : bins) chi += (b - expected) * (b - expected) / expected;
  return special::gamma_q(4.5, chi / 2.0);
}

/// Per-substring p-values and the stock battery summary of them.
class Tally {
 public:
  void add(double p) { ps_.push_back(clamp_p(p)); }

  void fill(Outcome& out, double alpha, std::size_t substrings) const {
    const double s = static_cast<double>(ps_.size());
    const double passed = static_cast<double>(std::count_if(ps_.begin(), ps_.end(), [&](double p) { return p >= alpha; }));
    const double phat = 1.0 - alpha;
    out.diagnostics["substrings"] = static_cast<double>(substrings);
    out.diagnostics["pass_proportion"] = s > 0 ? passed / s : std::nan("");
    out.diagnostics["proportion_floor"] = s > 0 ? phat - 3.0 * std::sqrt(phat * (1.0 - phat) / s) : std::nan("");
    out.diagnostics["uniformity_p"] = uniformity_p(ps_);
  }

 private:
  std::vector<double> ps_;
};

/// Combines component p-values into one by the Šidák rule, recording the components.
inline double combine(Outcome& out, std::initializer_list<std::pair<const char*, double>> parts) {
  double pmin = 1.0;
  for (const auto& [name, p] : parts) {
    out.diagnostics[std::string("p_") + name] = p;
    pmin = std::min(pmin, p);
  }
  return special::sidak(pmin, parts.size());
}

/// Cyclic overlapping counts of every k-bit pattern (windows wrap around the end).
inline std::vector<std::uint32_t> cyclic_counts(Bits bits, unsigned k) {
  std::vector<std::uint32_t> counts(std::size_t{1} << k, 0);
  const std::size_t n = bits.size();
  if (k == 0) {
    counts[0] = static_cast<std::uint32_t>(n);
    return counts;
  }
  const std::uint32_t mask = static_cast<std::uint32_t>((1U << k) - 1);
  std::uint32_t w = 0;
  for (unsigned i = 0; i + 1 < k; ++i) w = (w << 1) | bits[i % n];
  for (std::size_t i = 0; i < n; ++i) {
    w = ((w << 1) | bits[(i + k - 1) % n]) & mask;
    ++counts[w];
  }
  return counts;
}

// ---------------------------------------------------------------------------------------------
// Frequency (monobit)

inline double frequency_block_p(Bits b) {
  long long s = 0;
  for (auto x : b) s += x ? 1 : -1;
  return std::erfc(std::abs(static_cast<double>(s)) / std::sqrt(2.0 * static_cast<double>(b.size())));
}

inline Outcome frequency(Bits bits, std::size_t t, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  long long total = 0;
  Tally tally;
  for (std::size_t i = 0; i < subs; ++i) {
    auto sub = bits.subspan(i * t, t);
    long long s = 0;
    for (auto x : sub) s += x ? 1 : -1;
    total += s;
    tally.add(std::erfc(std::abs(static_cast<double>(s)) / std::sqrt(2.0 * static_cast<double>(t))));
  }
  Outcome out;
  out.statistic = static_cast<double>(total) / std::sqrt(static_cast<double>(subs * t));
  out.p_values = {std::erfc(std::abs(out.statistic) / std::numbers::sqrt2)};
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Frequency within a block

inline double block_frequency_block_p(Bits b, std::size_t m) {
  const std::size_t blocks = b.size() / m;
  if (blocks == 0) throw LengthError("block frequency needs at least one block");
  double chi = 0.0;
  for (std::size_t j = 0; j < blocks; ++j) {
    std::size_t ones = 0;
    for (std::size_t i = 0; i < m; ++i) ones += b[j * m + i];
    const double pi = static_cast<double>(ones) / static_cast<double>(m) - 0.5;
    chi += pi * pi;
  }
  chi *= 4.0 * static_cast<double>(m);
  return special::gamma_q(static_cast<double>(blocks) / 2.0, chi / 2.0);
}

inline Outcome block_frequency(Bits bits, std::size_t t, std::size_t m, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  if (m == 0 || t / m == 0) throw DomainError("block length must be in [1, t]");
  const std::size_t blocks = t / m;
  // Each block contributes (2w − M)²/M, whose null mean is 1 and variance 2 − 2/M.
  double total = 0.0;
  Tally tally;
  for (std::size_t i = 0; i < subs; ++i) {
    auto sub = bits.subspan(i * t, t);
    double chi = 0.0;
    for (std::size_t j = 0; j < blocks; ++j) {
      long long ones = 0;
      for (std::size_t k = 0; k < m; ++k) ones += sub[j * m + k];
      const double dev = static_cast<double>(2 * ones - static_cast<long long>(m));
      chi += dev * dev / static_cast<double>(m);
    }
    total += chi;
    tally.add(special::gamma_q(static_cast<double>(blocks) / 2.0, chi / 2.0));
  }
  const double count = static_cast<double>(subs * blocks);
  Outcome out;
  out.statistic = total;
  out.p_values = {special::scaled_chi2_sf(total, count, count * (2.0 - 2.0 / static_cast<double>(m)))};
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Cumulative sums

/// max_k |S_k| of the ±1 partial sums, forward or from the end.
inline long long cusum_excursion(Bits b, bool backward) {
  long long s = 0, z = 0;
  const std::size_t n = b.size();
  for (std::size_t i = 0; i < n; ++i) {
    s += b[backward ? n - 1 - i : i] ? 1 : -1;
    z = std::max(z, std::abs(s));
  }
  return z;
}

/// Published p-value for excursion z over n steps (C integer division in the summation bounds).
inline double cusum_p(long long n, long long z) {
  if (z <= 0) return 1.0;
  const double sqn = std::sqrt(static_cast<double>(n));
  const double zd = static_cast<double>(z);
  double sum1 = 0.0;
  for (long long k = (-n / z + 1) / 4; k <= (n / z - 1) / 4; ++k)
    sum1 += normal_cdf((4.0 * k + 1.0) * zd / sqn) - normal_cdf((4.0 * k - 1.0) * zd / sqn);
  double sum2 = 0.0;
  for (long long k = (-n / z - 3) / 4; k <= (n / z - 1) / 4; ++k)
    sum2 += normal_cdf((4.0 * k + 3.0) * zd / sqn) - normal_cdf((4.0 * k + 1.0) * zd / sqn);
  return clamp_p(1.0 - sum1 + sum2);
}

inline double cusum_block_p(Bits b, bool backward) {
  return cusum_p(static_cast<long long>(b.size()), cusum_excursion(b, backward));
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

/// Exact null distribution of max_k |S_k| for an n-step fair ±1 walk; entry z is P(max = z).
inline std::vector<double> excursion_distribution(std::size_t n) {
  // prob[(s + n) * (n + 1) + m]: walk at s with running max |S| equal to m.
  const std::size_t w = n + 1;
  std::vector<double> cur((2 * n + 1) * w, 0.0), next(cur.size());
  cur[n * w + 0] = 1.0;
  for (std::size_t step = 0; step < n; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    const long long reach = static_cast<long long>(step);
    for (long long s = -reach; s <= reach; ++s) {
      for (std::size_t m = static_cast<std::size_t>(std::abs(s)); m <= step; ++m) {
        const double p = cur[(s + n) * w + m];
        if (p == 0.0) continue;
        for (long long d : {-1LL, 1LL}) {
          const long long s2 = s + d;
          const std::size_t m2 = std::max<std::size_t>(m, static_cast<std::size_t>(std::abs(s2)));
          next[(s2 + n) * w + m2] += 0.5 * p;
        }
      }
    }
    std::swap(cur, next);
  }
  std::vector<double> dist(n + 1, 0.0);
  for (std::size_t s = 0; s < 2 * n + 1; ++s)
    for (std::size_t m = 0; m <= n; ++m) dist[m] += cur[s * w + m];
  return dist;
}

inline Moments excursion_moments(std::size_t n) {
  static Memo<std::size_t, Moments> memo;
  return *memo.get(n, [n] {
    const auto dist = excursion_distribution(n);
    Moments mo;
    for (std::size_t z = 0; z < dist.size(); ++z) mo.mean += dist[z] * static_cast<double>(z);
    for (std::size_t z = 0; z < dist.size(); ++z) {
      const double d = static_cast<double>(z) - mo.mean;
      mo.variance += dist[z] * d * d;
    }
    return mo;
  });
}

inline Outcome cumulative_sums(Bits bits, std::size_t t, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  const Moments mo = excursion_moments(t);
  double fwd = 0.0, bwd = 0.0;
  Tally tally;
  for (std::size_t i = 0; i < subs; ++i) {
    auto sub = bits.subspan(i * t, t);
    const long long zf = cusum_excursion(sub, false);
    const long long zb = cusum_excursion(sub, true);
    fwd += static_cast<double>(zf);
    bwd += static_cast<double>(zb);
    tally.add(cusum_p(static_cast<long long>(t), zf));
    tally.add(cusum_p(static_cast<long long>(t), zb));
  }
  const double s = static_cast<double>(subs);
  Outcome out;
  const double p_fwd = special::scaled_chi2_sf(fwd, s * mo.mean, s * mo.variance);
  const double p_bwd = special::scaled_chi2_sf(bwd, s * mo.mean, s * mo.variance);
  out.statistic = p_fwd <= p_bwd ? fwd : bwd;
  out.p_values = {combine(out, {{"forward", p_fwd}, {"backward", p_bwd}})};
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Runs

inline double runs_block_p(Bits b) {
  const double n = static_cast<double>(b.size());
  std::size_t ones = 0;
  for (auto x : b) ones += x;
  const double pi = static_cast<double>(ones) / n;
  if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(n)) return 0.0;  // frequency prerequisite failed
  std::size_t v = 1;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) v += b[i] != b[i + 1];
  const double num = std::abs(static_cast<double>(v) - 2.0 * n * pi * (1.0 - pi));
  const double den = 2.0 * std::sqrt(2.0 * n) * pi * (1.0 - pi);
  return std::erfc(num / den);
}

inline Outcome runs(Bits bits, std::size_t t, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  // Pooled: number of runs given the count of ones has exact (Wald–Wolfowitz) mean and variance.
  double dev = 0.0, var = 0.0;
  Tally tally;
  const double n = static_cast<double>(t);
  for (std::size_t i = 0; i < subs; ++i) {
    auto sub = bits.subspan(i * t, t);
    tally.add(runs_block_p(sub));
    std::size_t ones = 0, v = 1;
    for (std::size_t k = 0; k < t; ++k) ones += sub[k];
    for (std::size_t k = 0; k + 1 < t; ++k) v += sub[k] != sub[k + 1];
    if (ones == 0 || ones == t) continue;
    const double n1 = static_cast<double>(ones), n0 = n - n1;
    const double mean = 1.0 + 2.0 * n1 * n0 / n;
    const double variance = 2.0 * n1 * n0 * (2.0 * n1 * n0 - n) / (n * n * (n - 1.0));
    dev += static_cast<double>(v) - mean;
    var += variance;
  }
  Outcome out;
  if (var > 0.0) {
    out.statistic = dev / std::sqrt(var);
    out.p_values = {special::normal_two_sided(out.statistic)};
  } else {
    // No substring contains both symbols.
    out.statistic = std::numeric_limits<double>::infinity();
    out.p_values = {0.0};
  }
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Longest run of ones in a block

struct LongestRunLayout {
  std::size_t block = 8;
  unsigned lowest = 1;     // first category is "longest <= lowest"
  unsigned categories = 4;  // last category is "longest >= lowest + categories - 1"
  std::vector<double> published;
};

inline LongestRunLayout longest_run_layout(std::size_t m) {
  switch (m) {
    case 8: return {8, 1, 4, {0.2148, 0.3672, 0.2305, 0.1875}};
    case 128: return {128, 4, 6, {0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124}};
    case 10000: return {10000, 10, 7, {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727}};
    default: throw DomainError("longest-run block length must be 8, 128 or 10000");
  }
}

inline unsigned longest_run_of_ones(Bits b) {
  unsigned best = 0, run = 0;
  for (auto x : b) {
    run = x ? run + 1 : 0;
    best = std::max(best, run);
  }
  return best;
}

/// P(longest run of ones <= r) in m fair bits.
inline double longest_run_cdf(std::size_t m, unsigned r) {
  // state: length of the current trailing run of ones, capped at r.
  std::vector<double> cur(r + 1, 0.0), next(r + 1);
  cur[0] = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    for (unsigned s = 0; s <= r; ++s) {
      next[0] += 0.5 * cur[s];
      if (s < r) next[s + 1] += 0.5 * cur[s];
    }
    std::swap(cur, next);
  }
  double total = 0.0;
  for (double p : cur) total += p;
  return total;
}

inline std::vector<double> longest_run_exact_probs(const LongestRunLayout& lay) {
  std::vector<double> probs(lay.categories);
  double prev = 0.0;
  for (unsigned c = 0; c + 1 < lay.categories; ++c) {
    const double cdf = longest_run_cdf(lay.block, lay.lowest + c);
    probs[c] = cdf - prev;
    prev = cdf;
  }
  probs.back() = 1.0 - prev;
  return probs;
}

inline std::vector<std::size_t> longest_run_histogram(Bits b, const LongestRunLayout& lay) {
  std::vector<std::size_t> v(lay.categories, 0);
  const std::size_t blocks = b.size() / lay.block;
  for (std::size_t j = 0; j < blocks; ++j) {
    const unsigned run = longest_run_of_ones(b.subspan(j * lay.block, lay.block));
    const unsigned cat = run <= lay.lowest ? 0 : std::min(run - lay.lowest, lay.categories - 1);
    ++v[cat];
  }
  return v;
}

inline double pearson(std::span<const std::size_t> v, std::span<const double> probs, double n) {
  double chi = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double e = n * probs[i];
    chi += (static_cast<double>(v[i]) - e) * (static_cast<double>(v[i]) - e) / e;
  }
  return chi;
}

/// Published test on one substring with the published (rounded) category probabilities.
inline double longest_run_block_p(Bits b, std::size_t m) {
  const auto lay = longest_run_layout(m);
  const std::size_t blocks = b.size() / m;
  if (blocks == 0) throw LengthError("longest-run test needs at least one block");
  const auto v = longest_run_histogram(b, lay);
  const double chi = pearson(v, lay.published, static_cast<double>(blocks));
  return special::gamma_q((lay.categories - 1) / 2.0, chi / 2.0);
}

/// Exact mean and variance of the per-substring Pearson statistic (exact category probabilities),
/// by enumerating all multinomial outcomes.
inline Moments pearson_moments(std::span<const double> probs, std::size_t n) {
  const std::size_t k = probs.size();
  std::vector<double> log_probs(k);
  for (std::size_t i = 0; i < k; ++i) log_probs[i] = std::log(probs[i]);
  std::vector<std::size_t> v(k, 0);
  double m1 = 0.0, m2 = 0.0;
  const double log_nfact = special::log_gamma(static_cast<double>(n) + 1.0);
  // Recursive enumeration of compositions of n into k parts.
  auto rec = [&](auto&& self, std::size_t idx, std::size_t left) -> void {
    if (idx + 1 == k) {
      v[idx] = left;
      double logp = log_nfact;
      for (std::size_t i = 0; i < k; ++i) logp += static_cast<double>(v[i]) * log_probs[i] - special::log_gamma(static_cast<double>(v[i]) + 1.0);
      const double p = std::exp(logp);
      const double chi = pearson(v, probs, static_cast<double>(n));
      m1 += p * chi;
      m2 += p * chi * chi;
      return;
    }
    for (std::size_t c = 0; c <= left; ++c) {
      v[idx] = c;
      self(self, idx + 1, left - c);
    }
  };
  rec(rec, 0, n);
  return {m1, m2 - m1 * m1};
}

inline Outcome longest_run(Bits bits, std::size_t t, std::size_t m, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  const auto lay = longest_run_layout(m);
  const std::size_t blocks = t / m;
  if (blocks == 0) throw DomainError("longest-run block longer than substring");
  struct Table {
    std::vector<double> probs;
    Moments moments;
  };
  static Memo<std::pair<std::size_t, std::size_t>, Table> memo;
  const auto table = memo.get({m, blocks}, [&] {
    Table tb;
    tb.probs = longest_run_exact_probs(lay);
    tb.moments = pearson_moments(tb.probs, blocks);
    return tb;
  });
  double total = 0.0;
  Tally tally;
  for (std::size_t i = 0; i < subs; ++i) {
    const auto v = longest_run_histogram(bits.subspan(i * t, t), lay);
    const double nb = static_cast<double>(blocks);
    tally.add(special::gamma_q((lay.categories - 1) / 2.0, pearson(v, lay.published, nb) / 2.0));
    total += pearson(v, table->probs, nb);
  }
  const double s = static_cast<double>(subs);
  Outcome out;
  out.statistic = total;
  out.p_values = {special::scaled_chi2_sf(total, s * table->moments.mean, s * table->moments.variance)};
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Discrete Fourier transform (spectral)

inline std::shared_ptr<const FftPlan> fft_plan(std::size_t n) {
  static Memo<std::size_t, FftPlan> memo;
  return memo.get(n, [n] { return FftPlan(n); });
}

/// Number of the first n/2 DFT moduli of the ±1 sequence below the 95% peak height.
inline std::size_t fft_below_threshold(Bits b, const FftPlan& plan) {
  const std::size_t n = b.size();
  std::vector<std::complex<double>> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[i] ? 1.0 : -1.0;
  plan.forward(x, y);
  const double threshold = std::sqrt(std::log(1.0 / 0.05) * static_cast<double>(n));
  std::size_t below = 0;
  for (std::size_t k = 0; k < n / 2; ++k) below += std::abs(y[k]) < threshold;
  return below;
}

inline double fft_p_from_count(std::size_t n, std::size_t below) {
  const double nd = static_cast<double>(n);
  const double n0 = 0.95 * nd / 2.0;
  const double d = (static_cast<double>(below) - n0) / std::sqrt(nd * 0.95 * 0.05 / 4.0);
  return std::erfc(std::abs(d) / std::numbers::sqrt2);
}

inline double fft_block_p(Bits b) {
  const auto plan = fft_plan(b.size());
  return fft_p_from_count(b.size(), fft_below_threshold(b, *plan));
}

/// Null mean and variance of the below-threshold count for an n-bit substring. The DC term is
/// exact (a binomial tail). The other n/2 − 1 moduli are asymptotically exponential with
/// P(below) = 0.95, but Parseval fixes their total, so the count behaves like an empirical CDF
/// evaluated at c times an estimated scale (c = ln 20): per-bin variance p(1 − p) − (c·e^−c)².
inline Moments fft_count_moments(std::size_t n) {
  const double nd = static_cast<double>(n);
  const double threshold = std::sqrt(std::log(1.0 / 0.05) * nd);
  double p0 = 0.0;
  for (std::size_t ones = 0; ones <= n; ++ones) {
    const double s = std::abs(2.0 * static_cast<double>(ones) - nd);
    if (s >= threshold) continue;
    p0 += std::exp(special::log_gamma(nd + 1) - special::log_gamma(static_cast<double>(ones) + 1) -
                   special::log_gamma(nd - static_cast<double>(ones) + 1) - nd * std::numbers::ln2);
  }
  const double others = static_cast<double>(n / 2 - 1);
  const double c = std::log(20.0);
  const double scale_term = c * 0.05 * c * 0.05;
  return {p0 + others * 0.95, p0 * (1.0 - p0) + others * (0.95 * 0.05 - scale_term)};
}

inline Outcome fft(Bits bits, std::size_t t, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  if (t < 4) throw DomainError("spectral test needs substrings of at least 4 bits");
  const auto plan = fft_plan(t);
  const Moments mo = fft_count_moments(t);
  double total = 0.0;
  Tally tally;
  for (std::size_t i = 0; i < subs; ++i) {
    const std::size_t below = fft_below_threshold(bits.subspan(i * t, t), *plan);
    total += static_cast<double>(below);
    tally.add(fft_p_from_count(t, below));
  }
  const double s = static_cast<double>(subs);
  Outcome out;
  out.statistic = (total - s * mo.mean) / std::sqrt(s * mo.variance);
  out.p_values = {special::normal_two_sided(out.statistic)};
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Non-overlapping template matching

/// m-bit patterns with no proper border (no shift of the pattern overlaps itself), ascending.
inline std::vector<std::uint32_t> aperiodic_templates(unsigned m) {
  std::vector<std::uint32_t> out;
  for (std::uint32_t v = 0; v < (1U << m); ++v) {
    bool aperiodic = true;
    for (unsigned shift = 1; shift < m && aperiodic; ++shift) {
      // Border of length m − shift: the top m − shift bits equal the low m − shift bits.
      const std::uint32_t len_mask = (1U << (m - shift)) - 1;
      if ((v >> shift) == (v & len_mask)) aperiodic = false;
    }
    if (aperiodic) out.push_back(v);
  }
  return out;
}

/// Non-overlapping occurrence count of `tmpl` (m bits, first bit most significant) in `b`, scanning as published.
inline std::size_t template_count(Bits b, std::uint32_t tmpl, unsigned m) {
  std::size_t count = 0;
  std::size_t i = 0;
  while (i + m <= b.size()) {
    bool match = true;
    for (unsigned k = 0; k < m && match; ++k) match = b[i + k] == ((tmpl >> (m - 1 - k)) & 1U);
    if (match) {
      ++count;
      i += m;
    } else {
      ++i;
    }
  }
  return count;
}

struct TemplateNull {
  double mu = 0.0;
  double sigma2 = 0.0;
  std::vector<double> scaled;  // (w − mu)² / sigma2 for count w
  std::vector<double> probs;   // exact null P(W = w)
};

/// Exact null distribution of the non-overlapping count of `tmpl` in `block` fair bits, via the
/// pattern's matching automaton.
inline std::vector<double> template_count_distribution(std::uint32_t tmpl, unsigned m, std::size_t block) {
  std::vector<int> pat(m);
  for (unsigned k = 0; k < m; ++k) pat[k] = (tmpl >> (m - 1 - k)) & 1U;
  // After a full match the scan restarts from scratch (state 0), which is what non-overlapping means.
  std::vector<unsigned> border(m, 0);  // longest proper border of pat[0..i]
  for (unsigned i = 1; i < m; ++i) {
    unsigned k = border[i - 1];
    while (k > 0 && pat[i] != pat[k]) k = border[k - 1];
    if (pat[i] == pat[k]) ++k;
    border[i] = k;
  }
  std::vector<std::array<unsigned, 2>> delta(m);
  for (unsigned q = 0; q < m; ++q)
    for (int c = 0; c < 2; ++c) {
      if (pat[q] == c) delta[q][c] = q + 1;
      else delta[q][c] = q == 0 ? 0 : delta[border[q - 1]][c];
    }
  const std::size_t max_count = block / m + 1;
  std::vector<double> cur(m * max_count, 0.0), next(cur.size());
  cur[0] = 1.0;
  for (std::size_t i = 0; i < block; ++i) {
    std::fill(next.begin(), next.end(), 0.0);
    for (unsigned q = 0; q < m; ++q)
      for (std::size_t c = 0; c < max_count; ++c) {
        const double p = cur[q * max_count + c];
        if (p == 0.0) continue;
        for (int bit = 0; bit < 2; ++bit) {
          const unsigned q2 = delta[q][bit];
          if (q2 == m) next[0 * max_count + c + 1] += 0.5 * p;
          else next[q2 * max_count + c] += 0.5 * p;
        }
      }
    std::swap(cur, next);
  }
  std::vector<double> dist(max_count, 0.0);
  for (unsigned q = 0; q < m; ++q)
    for (std::size_t c = 0; c < max_count; ++c) dist[c] += cur[q * max_count + c];
  return dist;
}

inline TemplateNull template_null(std::uint32_t tmpl, unsigned m, std::size_t block) {
  TemplateNull tn;
  const double md = static_cast<double>(block);
  tn.mu = (md - m + 1) / std::ldexp(1.0, static_cast<int>(m));
  tn.sigma2 = md * (1.0 / std::ldexp(1.0, static_cast<int>(m)) - (2.0 * m - 1.0) / std::ldexp(1.0, static_cast<int>(2 * m)));
  tn.probs = template_count_distribution(tmpl, m, block);
  for (std::size_t c = 0; c < tn.probs.size(); ++c)
    tn.scaled.push_back((static_cast<double>(c) - tn.mu) * (static_cast<double>(c) - tn.mu) / tn.sigma2);
  return tn;
}

/// Published per-substring p-value for one template, `blocks` equal blocks.
inline double template_block_p(Bits b, std::uint32_t tmpl, unsigned m, std::size_t blocks) {
  const std::size_t block = b.size() / blocks;
  if (block < m) throw LengthError("template blocks shorter than the template");
  const double md = static_cast<double>(block);
  const double mu = (md - m + 1) / std::ldexp(1.0, static_cast<int>(m));
  const double sigma2 =
      md * (1.0 / std::ldexp(1.0, static_cast<int>(m)) - (2.0 * m - 1.0) / std::ldexp(1.0, static_cast<int>(2 * m)));
  double chi = 0.0;
  for (std::size_t j = 0; j < blocks; ++j) {
    const double w = static_cast<double>(template_count(b.subspan(j * block, block), tmpl, m));
    chi += (w - mu) * (w - mu) / sigma2;
  }
  return special::gamma_q(static_cast<double>(blocks) / 2.0, chi / 2.0);
}

inline Outcome non_overlapping_template(Bits bits, std::size_t t, unsigned m, std::size_t blocks, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  if (m < 2 || m > 16) throw DomainError("template length must be in [2, 16]");
  if (blocks == 0 || t / blocks < m) throw DomainError("template blocks shorter than the template");
  const std::size_t block = t / blocks;
  const auto templates = aperiodic_templates(m);
  static Memo<std::tuple<unsigned, std::size_t>, std::vector<TemplateNull>> memo;
  const auto nulls = memo.get({m, block}, [&] {
    std::vector<TemplateNull> v;
    for (auto tp : templates) v.push_back(template_null(tp, m, block));
    return v;
  });

  // For aperiodic templates, occurrences cannot overlap, so each block's count is the number
  // of m-bit windows equal to the template: one histogram per block serves every template.
  std::vector<double> totals(templates.size(), 0.0);
  std::vector<double> per_sub_chi(templates.size());
  std::vector<std::uint32_t> hist(std::size_t{1} << m);
  Tally tally;
  const std::uint32_t mask = (1U << m) - 1;
  for (std::size_t s = 0; s < subs; ++s) {
    std::fill(per_sub_chi.begin(), per_sub_chi.end(), 0.0);
    for (std::size_t j = 0; j < blocks; ++j) {
      auto blk = bits.subspan(s * t + j * block, block);
      std::fill(hist.begin(), hist.end(), 0);
      std::uint32_t w = 0;
      for (unsigned k = 0; k + 1 < m; ++k) w = (w << 1) | blk[k];
      for (std::size_t i = m - 1; i < block; ++i) {
        w = ((w << 1) | blk[i]) & mask;
        ++hist[w];
      }
      for (std::size_t k = 0; k < templates.size(); ++k) {
        const auto& nl = (*nulls)[k];
        const double d = static_cast<double>(hist[templates[k]]) - nl.mu;
        per_sub_chi[k] += d * d / nl.sigma2;
      }
    }
    for (std::size_t k = 0; k < templates.size(); ++k) {
      totals[k] += per_sub_chi[k];
      tally.add(special::gamma_q(static_cast<double>(blocks) / 2.0, per_sub_chi[k] / 2.0));
    }
  }
  const double units = static_cast<double>(subs * blocks);
  double pmin = 1.0;
  std::size_t worst = 0;
  for (std::size_t k = 0; k < templates.size(); ++k) {
    const auto& nl = (*nulls)[k];
    const double p = special::iid_sum_sf(nl.scaled, nl.probs, units, totals[k]);
    if (p < pmin) {
      pmin = p;
      worst = k;
    }
  }
  Outcome out;
  out.statistic = totals[worst];
  out.p_values = {special::sidak(pmin, templates.size())};
  out.diagnostics["templates"] = static_cast<double>(templates.size());
  out.diagnostics["worst_template"] = static_cast<double>(templates[worst]);
  out.diagnostics["p_worst_template"] = pmin;
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Approximate entropy

inline double phi_from_counts(std::span<const std::uint32_t> counts, double n) {
  double phi = 0.0;
  for (auto c : counts)
    if (c > 0) phi += (c / n) * std::log(c / n);
  return phi;
}

inline double apen_chi_from_counts(std::span<const std::uint32_t> cm, std::span<const std::uint32_t> cm1, double n) {
  const double apen = phi_from_counts(cm, n) - phi_from_counts(cm1, n);
  return std::max(0.0, 2.0 * n * (std::numbers::ln2 - apen));
}

inline double approximate_entropy_block_p(Bits b, unsigned m) {
  const double n = static_cast<double>(b.size());
  const auto cm = cyclic_counts(b, m);
  const auto cm1 = cyclic_counts(b, m + 1);
  return special::gamma_q(std::ldexp(1.0, static_cast<int>(m) - 1), apen_chi_from_counts(cm, cm1, n) / 2.0);
}

inline Outcome approximate_entropy(Bits bits, std::size_t t, unsigned m, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  if (m < 1 || m > 20) throw DomainError("approximate entropy order must be in [1, 20]");
  // Pooled: the same statistic on the summed cyclic pattern counts of all substrings.
  std::vector<std::uint32_t> total_m(std::size_t{1} << m, 0), total_m1(std::size_t{1} << (m + 1), 0);
  Tally tally;
  const double dof_half = std::ldexp(1.0, static_cast<int>(m) - 1);
  for (std::size_t i = 0; i < subs; ++i) {
    auto sub = bits.subspan(i * t, t);
    const auto cm = cyclic_counts(sub, m);
    const auto cm1 = cyclic_counts(sub, m + 1);
    for (std::size_t k = 0; k < cm.size(); ++k) total_m[k] += cm[k];
    for (std::size_t k = 0; k < cm1.size(); ++k) total_m1[k] += cm1[k];
    tally.add(special::gamma_q(dof_half, apen_chi_from_counts(cm, cm1, static_cast<double>(t)) / 2.0));
  }
  Outcome out;
  out.statistic = apen_chi_from_counts(total_m, total_m1, static_cast<double>(subs * t));
  out.p_values = {special::gamma_q(dof_half, out.statistic / 2.0)};
  tally.fill(out, alpha, subs);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Serial

inline double psi2_from_counts(std::span<const std::uint32_t> counts, unsigned k, double n) {
  if (k == 0) return 0.0;
  double sum = 0.0;
  for (auto c : counts) sum += static_cast<double>(c) * static_cast<double>(c);
  return std::ldexp(1.0, static_cast<int>(k)) / n * sum - n;
}

struct SerialStats {
  double del1 = 0.0;
  double del2 = 0.0;
};

inline SerialStats serial_from_counts(std::span<const std::uint32_t> c0, std::span<const std::uint32_t> c1,
                                      std::span<const std::uint32_t> c2, unsigned m, double n) {
  const double p0 = psi2_from_counts(c0, m, n);
  const double p1 = psi2_from_counts(c1, m - 1, n);
  const double p2 = m >= 2 ? psi2_from_counts(c2, m - 2, n) : 0.0;
  return {p0 - p1, p0 - 2.0 * p1 + p2};
}

inline std::pair<double, double> serial_p(const SerialStats& s, unsigned m) {
  return {special::gamma_q(std::ldexp(1.0, static_cast<int>(m) - 2), s.del1 / 2.0),
          special::gamma_q(std::ldexp(1.0, static_cast<int>(m) - 3), s.del2 / 2.0)};
}

/// Both published p-values (first and second differences) for one substring.
inline std::pair<double, double> serial_block_p(Bits b, unsigned m) {
  const double n = static_cast<double>(b.size());
  const auto c0 = cyclic_counts(b, m);
  const auto c1 = cyclic_counts(b, m - 1);
  const auto c2 = cyclic_counts(b, m >= 2 ? m - 2 : 0);
  return serial_p(serial_from_counts(c0, c1, c2, m, n), m);
}

inline Outcome serial(Bits bits, std::size_t t, unsigned m, double alpha) {
  const std::size_t subs = substring_count(bits.size(), t);
  if (m < 2 || m > 20) throw DomainError("serial order must be in [2, 20]");
  std::vector<std::uint32_t> t0(std::size_t{1} << m, 0), t1(std::size_t{1} << (m - 1), 0), t2(std::size_t{1} << (m - 2), 0);
  Tally tally;
  for (std::size_t i = 0; i < subs; ++i) {
    auto sub = bits.subspan(i * t, t);
    const auto c0 = cyclic_counts(sub, m);
    const auto c1 = cyclic_counts(sub, m - 1);
    const auto c2 = cyclic_counts(sub, m - 2);
    for (std::size_t k = 0; k < c0.size(); ++k) t0[k] += c0[k];
    for (std::size_t k = 0; k < c1.size(); ++k) t1[k] += c1[k];
    for (std::size_t k = 0; k < c2.size(); ++k) t2[k] += c2[k];
    const auto [pa, pb] = serial_p(serial_from_counts(c0, c1, c2, m, static_cast<double>(t)), m);
    tally.add(pa);
    tally.add(pb);
  }
  const auto pooled = serial_from_counts(t0, t1, t2, m, static_cast<double>(subs * t));
  const auto [p1, p2] = serial_p(pooled, m);
  Outcome out;
  out.statistic = pooled.del1;
  out.diagnostics["del2"] = pooled.del2;
  out.p_values = {combine(out, {{"del1", p1}, {"del2", p2}})};
  tally.fill(out, alpha, subs);
  return out;
}

}  // namespace tickrand::stats::nist
