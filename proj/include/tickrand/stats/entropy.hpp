#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "tickrand/error.hpp"
#include "tickrand/special.hpp"
#include "tickrand/stats/result.hpp"

namespace tickrand::stats {

/// Block length for the entropy tests: 0.5·log2(N) rounded to nearest, ties up, at least 1.
inline unsigned block_length(std::size_t n) {
  if (n < 4) throw LengthError("block_length needs N >= 4");
  const double k = std::floor(0.5 * std::log2(static_cast<double>(n)) + 0.5);
  return std::max(1U, static_cast<unsigned>(k));
}

namespace detail {

inline double xlogy_ratio(double f, double ratio) { return f > 0.0 ? f * std::log(ratio) : 0.0; }

// Value of bits[i..i+k) read most significant first.
inline std::uint32_t window(std::span<const std::uint8_t> bits, std::size_t i, unsigned k) {
  std::uint32_t v = 0;
  for (unsigned b = 0; b < k; ++b) v = (v << 1) | bits[i + b];
  return v;
}

}  // namespace detail

/// Block entropy deficit: Y1 = 2·Nb·(k ln 2 − Ĥ) over non-overlapping k-blocks, χ²(2^k − 1).
/// k = 0 selects block_length(N).
inline Outcome shannon_entropy(std::span<const std::uint8_t> bits, unsigned k = 0) {
  const std::size_t n = bits.size();
  if (k == 0) k = block_length(n);
  if (k > 24) throw DomainError("block length too large");
  if (n < 2 * static_cast<std::size_t>(k)) throw LengthError("shannon entropy test needs N >= 2k");
  const std::size_t blocks = n / k;
  std::vector<std::uint64_t> freq(std::size_t{1} << k, 0);
  for (std::size_t b = 0; b < blocks; ++b) ++freq[detail::window(bits, b * k, k)];

  // 2·Σ f ln(f / (Nb / 2^k)), which equals 2·Nb·(k ln 2 − Ĥ).
  const double expected = static_cast<double>(blocks) / static_cast<double>(freq.size());
  double y1 = 0.0;
  for (auto f : freq) y1 += detail::xlogy_ratio(static_cast<double>(f), static_cast<double>(f) / expected);
  y1 *= 2.0;
  y1 = std::max(y1, 0.0);
  const double df = static_cast<double>(freq.size() - 1);
  Outcome out;
  out.statistic = y1;
  out.p_values = {special::chi2_sf(y1, df)};
  out.diagnostics = {{"k", k}, {"blocks", static_cast<double>(blocks)}, {"df", df}};
  return out;
}

/// Independence of each bit from the preceding k − 1: likelihood-ratio statistic
/// Y2 = 2 Σ f_ij ln(N_o f_ij / (f_i· f_·j)) over the N − k + 1 overlapping windows,
/// χ²(2^(k−1) − 1). Invariant under complementing every bit.
inline Outcome kl_independence(std::span<const std::uint8_t> bits, unsigned k = 0) {
  const std::size_t n = bits.size();
  if (k == 0) k = block_length(n);
  if (k > 24) throw DomainError("block length too large");
  if (n < static_cast<std::size_t>(k) + 1) throw LengthError("KL test needs N >= k + 1");
  const std::size_t windows = n - k + 1;
  const std::size_t prefixes = std::size_t{1} << (k - 1);
  std::vector<std::uint64_t> joint(2 * prefixes, 0);  // [prefix * 2 + next]
  const std::uint32_t mask = static_cast<std::uint32_t>((std::uint64_t{1} << k) - 1);
  std::uint32_t w = detail::window(bits, 0, k);
  ++joint[w];
  for (std::size_t i = 1; i < windows; ++i) {
    w = ((w << 1) | bits[i + k - 1]) & mask;
    ++joint[w];
  }
  std::vector<double> row(prefixes, 0.0);
  double col[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < prefixes; ++i)
    for (int j = 0; j < 2; ++j) {
      row[i] += static_cast<double>(joint[2 * i + j]);
      col[j] += static_cast<double>(joint[2 * i + j]);
    }
  const double no = static_cast<double>(windows);
  double y2 = 0.0;
  for (std::size_t i = 0; i < prefixes; ++i)
    for (int j = 0; j < 2; ++j) {
      const double f = static_cast<double>(joint[2 * i + j]);
      if (f > 0.0) y2 += f * std::log(no * f / (row[i] * col[j]));
    }
  y2 = std::max(2.0 * y2, 0.0);
  const double df = static_cast<double>(prefixes - 1);
  Outcome out;
  out.statistic = y2;
  out.p_values = {df > 0.0 ? special::chi2_sf(y2, df) : 1.0};
  out.diagnostics = {{"k", k}, {"windows", no}, {"df", df}};
  return out;
}

/// Balance of zeros and ones: Z = (2/√N)·|c − N/2| with c the zero count, p = erfc(Z/√2).
inline Outcome arithmetic_mean(std::span<const std::uint8_t> bits) {
  const std::size_t n = bits.size();
  if (n < 1) throw LengthError("arithmetic mean test needs N >= 1");
  std::size_t ones = 0;
  for (auto b : bits) ones += b;
  const double zeros = static_cast<double>(n - ones);
  const double z = 2.0 / std::sqrt(static_cast<double>(n)) * std::abs(zeros - 0.5 * static_cast<double>(n));
  Outcome out;
  out.statistic = z;
  out.p_values = {std::erfc(z / std::numbers::sqrt2)};
  out.diagnostics = {{"zeros", zeros}};
  return out;
}

}  // namespace tickrand::stats
