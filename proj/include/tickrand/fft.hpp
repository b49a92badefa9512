#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace tickrand {

/// Mixed-radix decimation-in-time DFT for arbitrary n, with the twiddle
/// table and factorisation computed once per plan. Prime factors p cost
/// O(n·p), so lengths such as 1000 = 2³·5³ are cheap.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n), twiddles_(n) {
    for (std::size_t k = 0; k < n; ++k) {
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
      twiddles_[k] = {std::cos(angle), std::sin(angle)};
    }
    std::size_t rest = n;
    for (std::size_t p = 2; p * p <= rest; ++p) {
      while (rest % p == 0) {
        factors_.push_back(p);
        rest /= p;
      }
    }
    if (rest > 1) factors_.push_back(rest);
  }

  std::size_t size() const noexcept { return n_; }

  /// out[k] = Σ_t in[t]·exp(-2πi·k·t/n).
  void forward(std::span<const std::complex<double>> in, std::span<std::complex<double>> out) const {
    if (n_ == 0) return;
    std::vector<std::complex<double>> scratch(max_factor());
    transform(in.data(), out.data(), n_, 1, 0, scratch);
  }

 private:
  std::size_t max_factor() const {
    std::size_t m = 1;
    for (auto f : factors_) m = std::max(m, f);
    return m;
  }

  void transform(const std::complex<double>* in, std::complex<double>* out, std::size_t n,
                 std::size_t stride, std::size_t depth, std::vector<std::complex<double>>& scratch) const {
    if (n == 1) {
      out[0] = in[0];
      return;
    }
    const std::size_t p = factors_[depth];
    const std::size_t m = n / p;
    for (std::size_t q = 0; q < p; ++q) transform(in + q * stride, out + q * m, m, stride * p, depth + 1, scratch);

    // out[q*m + k] now holds the length-m DFT of in[q + p*r]. Butterfly of radix p.
    std::vector<std::complex<double>> column(p);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t q = 0; q < p; ++q) column[q] = out[q * m + k] * twiddles_[(q * k * stride) % n_];
      for (std::size_t s = 0; s < p; ++s) {
        std::complex<double> acc = 0.0;
        for (std::size_t q = 0; q < p; ++q) acc += column[q] * twiddles_[(q * s * m * stride) % n_];
        scratch[s] = acc;
      }
      for (std::size_t s = 0; s < p; ++s) out[k + s * m] = scratch[s];
    }
  }

  std::size_t n_;
  std::vector<std::complex<double>> twiddles_;
  std::vector<std::size_t> factors_;
};

}  // namespace tickrand
