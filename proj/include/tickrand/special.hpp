#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>

#include "tickrand/error.hpp"

namespace tickrand::special {

namespace detail {

inline constexpr double kEpsilon = 1.0e-16;
inline constexpr int kMaxIterations = 200000;

// Remainder of Stirling's series, log Γ(a) - [(a - ½) log a - a + ½ log 2π]. Valid for a >= 10.
inline double stirling_remainder(double a) {
  const double inv = 1.0 / a;
  const double inv2 = inv * inv;
  return inv * (1.0 / 12.0 -
                inv2 * (1.0 / 360.0 -
                        inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 * (1.0 / 1188.0)))));
}

// log(1 + d) - d without cancellation for small |d|.
inline double log1pmx(double d) {
  if (std::abs(d) > 0.25) return std::log1p(d) - d;
  // -d²/2 + d³/3 - d⁴/4 + ...
  double term = d;
  double sum = 0.0;
  for (int k = 2; k < 200; ++k) {
    term *= -d;
    const double add = term / k;
    sum += add;
    if (std::abs(add) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// log of x^a e^-x / Γ(a), the common prefactor of both incomplete gamma tails.
inline double log_prefactor(double a, double x);

}  // namespace detail

/// Natural log of Γ(a) for a > 0. Lanczos (g = 7) below 10, Stirling above.
inline double log_gamma(double a) {
  if (!(a > 0.0)) throw DomainError("log_gamma requires a > 0");
  if (a >= 10.0) {
    return (a - 0.5) * std::log(a) - a + 0.5 * std::log(2.0 * std::numbers::pi) +
           detail::stirling_remainder(a);
  }
  if (a < 0.5) {
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * a)) - log_gamma(1.0 - a);
  }
  static constexpr double kCoefficients[] = {
      0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
      771.32342877765313,   -176.61502916214059,   12.507343278686905,
      -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};
  const double z = a - 1.0;
  double sum = kCoefficients[0];
  for (int i = 1; i < 9; ++i) sum += kCoefficients[i] / (z + i);
  const double t = z + 7.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(sum);
}

inline double detail::log_prefactor(double a, double x) {
  if (a < 10.0) return a * std::log(x) - x - log_gamma(a);
  const double d = (x - a) / a;
  return a * log1pmx(d) + 0.5 * std::log(a / (2.0 * std::numbers::pi)) - stirling_remainder(a);
}

/// Regularized lower incomplete gamma P(a, x).
inline double gamma_p(double a, double x);

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
inline double gamma_q(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma_q requires a > 0");
  if (std::isnan(x)) throw DomainError("gamma_q: x is NaN");
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  if (x < 1.0 || x < a) return 1.0 - gamma_p(a, x);

  const double log_ax = detail::log_prefactor(a, x);
  if (log_ax < -745.0) return 0.0;
  const double ax = std::exp(log_ax);

  // Continued fraction (modified Lentz).
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < detail::kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < detail::kEpsilon) break;
  }
  return ax * h;
}

inline double gamma_p(double a, double x) {
  if (!(a > 0.0)) throw DomainError("gamma_p requires a > 0");
  if (std::isnan(x)) throw DomainError("gamma_p: x is NaN");
  if (x <= 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  if (x > 1.0 && x > a) return 1.0 - gamma_q(a, x);

  const double log_ax = detail::log_prefactor(a, x);
  if (log_ax < -745.0) return 0.0;
  const double ax = std::exp(log_ax);

  // Power series.
  double r = a;
  double c = 1.0;
  double sum = 1.0;
  for (int i = 0; i < detail::kMaxIterations; ++i) {
    r += 1.0;
    c *= x / r;
    sum += c;
    if (c / sum < detail::kEpsilon) break;
  }
  return sum * ax / a;
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
inline double chi2_sf(double x, double df) { return gamma_q(0.5 * df, 0.5 * x); }

/// Upper tail of the standard normal, P(Z > z).
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

/// Two-sided normal tail, P(|Z| > |z|).
inline double normal_two_sided(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

/// Upper tail of c·χ²(ν) matched to a statistic with the given mean and
/// variance (Satterthwaite). Used when summing nonnegative per-block
/// statistics whose exact null moments are known.
inline double scaled_chi2_sf(double value, double mean, double variance) {
  if (!(mean > 0.0) || !(variance > 0.0)) throw DomainError("scaled_chi2_sf: nonpositive moment");
  const double scale = variance / (2.0 * mean);
  const double dof = 2.0 * mean * mean / variance;
  return chi2_sf(value / scale, dof);
}

/// Lugannani–Rice saddlepoint approximation to P(X_1 + ... + X_n >= t) for iid X taking
/// `values` with `probs`. Accurate far into the tail, which two-moment matching is not. Meant
/// for atoms that do not sit on a coarse lattice.
inline double iid_sum_sf(std::span<const double> values, std::span<const double> probs, double n, double t) {
  if (values.size() != probs.size() || values.empty()) throw DomainError("iid_sum_sf: bad distribution");
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, m1 = 0.0, p_hi = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    lo = std::min(lo, values[i]);
    hi = std::max(hi, values[i]);
    m1 += probs[i] * values[i];
  }
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == hi) p_hi += probs[i];
  if (t > n * hi) return 0.0;
  if (t == n * hi) return std::pow(p_hi, n);
  if (t <= n * lo) return 1.0;
  double m2 = 0.0, m3 = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double d = values[i] - m1;
    m2 += probs[i] * d * d;
    m3 += probs[i] * d * d * d;
  }
  const double k2 = n * m2, k3 = n * m3;
  const double sd = std::sqrt(k2);
  // Tilted moments at s: log M(s), M'(s)/M(s), M''(s)/M(s); shifted for stability.
  auto tilt = [&](double s, double& log_m, double& mean, double& second) {
    const double ref = s >= 0.0 ? hi : lo;
    double z = 0.0, z1 = 0.0, z2 = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (probs[i] <= 0.0) continue;
      const double e = probs[i] * std::exp(s * (values[i] - ref));
      z += e;
      z1 += e * values[i];
      z2 += e * values[i] * values[i];
    }
    log_m = std::log(z) + s * ref;
    mean = z1 / z;
    second = z2 / z;
  };
  if (std::abs(t - n * m1) < 1e-6 * sd) return 0.5 - k3 / (6.0 * std::sqrt(2.0 * std::numbers::pi) * k2 * sd);
  // Solve n·mean(s) = t by bisection on a bracket grown outward from 0.
  const double target = t / n;
  double a = 0.0, b = 0.0, log_m, mean, second;
  double step = 1.0 / std::max(sd / n, 1e-12);
  if (target > m1) {
    b = step;
    for (tilt(b, log_m, mean, second); mean < target; tilt(b, log_m, mean, second)) b *= 2.0;
  } else {
    a = -step;
    for (tilt(a, log_m, mean, second); mean > target; tilt(a, log_m, mean, second)) a *= 2.0;
  }
  // Safeguarded Newton: the tilted mean is increasing in s with derivative the tilted variance.
  double s = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    tilt(s, log_m, mean, second);
    if (mean < target) a = s;
    else b = s;
    const double var = second - mean * mean;
    double next = var > 0.0 ? s - (mean - target) / var : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    const bool done = std::abs(next - s) <= 1e-13 * std::max(1.0, std::abs(s));
    s = next;
    if (done || b - a <= 1e-15 * std::max(1.0, std::abs(s))) break;
  }
  tilt(s, log_m, mean, second);
  const double kk = n * log_m;
  const double kpp = n * (second - mean * mean);
  const double w2 = 2.0 * (s * t - kk);
  const double w = (s >= 0.0 ? 1.0 : -1.0) * std::sqrt(std::max(0.0, w2));
  const double u = s * std::sqrt(kpp);
  if (std::abs(w) < 1e-4 || std::abs(u) < 1e-10)
    return 0.5 - k3 / (6.0 * std::sqrt(2.0 * std::numbers::pi) * k2 * sd);
  const double phi = std::exp(-0.5 * w * w) / std::sqrt(2.0 * std::numbers::pi);
  return std::clamp(normal_sf(w) + phi * (1.0 / u - 1.0 / w), 0.0, 1.0);
}

/// Šidák adjustment of the smallest of `count` p-values.
inline double sidak(double p_min, std::size_t count) {
  if (count <= 1) return p_min;
  // 1 - (1 - p)^k, evaluated without cancellation for small p.
  return -std::expm1(static_cast<double>(count) * std::log1p(-p_min));
}

}  // namespace tickrand::special
