#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tickrand/bitstring.hpp"
#include "tickrand/error.hpp"
#include "tickrand/parallel.hpp"

namespace tickrand {

/// Canonical: bit 1 when the later price is higher (r = s_new / s_old > 1).
/// Reciprocal: r = s_old / s_new, which yields the complement string.
enum class RatioDirection { Canonical, Reciprocal };

inline std::string to_string(RatioDirection d) { return d == RatioDirection::Canonical ? "canonical" : "reciprocal"; }

inline RatioDirection parse_ratio_direction(const std::string& s) {
  if (s == "canonical") return RatioDirection::Canonical;
  if (s == "reciprocal") return RatioDirection::Reciprocal;
  throw Error("ratio direction must be 'canonical' or 'reciprocal', got '" + s + "'");
}

namespace detail {

inline void check_positive(std::span<const std::int64_t> prices) {
  for (auto p : prices)
    if (p <= 0) throw DomainError("nonpositive price " + std::to_string(p));
}

inline void check_cell(std::size_t level, std::size_t sample) {
  if (level < 1 || sample < 1 || sample > level)
    throw DomainError("need 1 <= sample <= level, got level " + std::to_string(level) + " sample " + std::to_string(sample));
}

inline BitString symbolize_unchecked(std::span<const std::int64_t> prices, std::size_t level, std::size_t sample,
                                     RatioDirection dir) {
  BitString out;
  const std::size_t n = prices.size();
  // 0-based: compare prices[j-1 + i*level] with prices[j-1 + (i-1)*level].
  if (n < sample + level) return out;
  out.reserve((n - sample) / level);
  const bool up_is_one = dir == RatioDirection::Canonical;
  for (std::size_t k = sample - 1 + level; k < n; k += level) {
    const auto now = prices[k];
    const auto before = prices[k - level];
    if (now == before) continue;
    out.push_back((now > before) == up_is_one);
  }
  return out;
}

}  // namespace detail

/// Bits for aggregation level `level` and phase `sample` (both 1-based): compares prices `level`
/// trades apart starting at index `sample`, emitting nothing for equal prices.
inline BitString symbolize(std::span<const std::int64_t> prices, std::size_t level, std::size_t sample,
                           RatioDirection dir = RatioDirection::Canonical) {
  detail::check_cell(level, sample);
  detail::check_positive(prices);
  return detail::symbolize_unchecked(prices, level, sample, dir);
}

/// Flat position of (level, sample) in an aggregation grid.
inline constexpr std::size_t cell_index(std::size_t level, std::size_t sample) {
  return level * (level - 1) / 2 + (sample - 1);
}

inline constexpr std::size_t cell_count(std::size_t max_level) { return max_level * (max_level + 1) / 2; }

/// All (level, sample) strings of one day, level in [1, max_level], sample in [1, level].
class AggregationGrid {
 public:
  AggregationGrid() = default;
  AggregationGrid(std::size_t max_level, std::vector<BitString> cells, std::string ticker = {}, std::string date = {})
      : max_level_(max_level), cells_(std::move(cells)), ticker_(std::move(ticker)), date_(std::move(date)) {
    if (cells_.size() != cell_count(max_level_)) throw Error("grid cell count mismatch");
  }

  std::size_t max_level() const noexcept { return max_level_; }
  std::size_t size() const noexcept { return cells_.size(); }
  const std::string& ticker() const noexcept { return ticker_; }
  const std::string& date() const noexcept { return date_; }

  const BitString& cell(std::size_t level, std::size_t sample) const {
    detail::check_cell(level, sample);
    if (level > max_level_) throw DomainError("level " + std::to_string(level) + " above grid max level");
    return cells_[cell_index(level, sample)];
  }

  const std::vector<BitString>& cells() const noexcept { return cells_; }

 private:
  std::size_t max_level_ = 0;
  std::vector<BitString> cells_;
  std::string ticker_;
  std::string date_;
};

inline AggregationGrid build_grid(std::span<const std::int64_t> prices, std::size_t max_level,
                                  RatioDirection dir = RatioDirection::Canonical, std::string ticker = {},
                                  std::string date = {}, unsigned jobs = 1) {
  if (max_level < 1) throw DomainError("max_level must be >= 1");
  detail::check_positive(prices);
  std::vector<BitString> cells(cell_count(max_level));
  parallel_for(max_level, jobs, [&](std::size_t l0) {
    const std::size_t level = l0 + 1;
    for (std::size_t j = 1; j <= level; ++j)
      cells[cell_index(level, j)] = detail::symbolize_unchecked(prices, level, j, dir);
  });
  return AggregationGrid(max_level, std::move(cells), std::move(ticker), std::move(date));
}

/// One (level, sample) string for a whole month: the days' cells in calendar order.
struct MonthlyString {
  std::string ticker;
  std::string month;
  std::size_t level = 1;
  std::size_t sample = 1;
  BitString bits;
  std::vector<std::size_t> day_boundaries;  // offset where each day's bits start
};

/// Concatenates cell (level, sample) of each day in the given order.
inline MonthlyString concat_month(std::span<const AggregationGrid* const> days, std::size_t level,
                                  std::size_t sample, std::string month = {}) {
  detail::check_cell(level, sample);
  MonthlyString out;
  out.month = std::move(month);
  out.level = level;
  out.sample = sample;
  for (const AggregationGrid* g : days) {
    if (out.day_boundaries.empty()) {
      out.ticker = g->ticker();
    } else if (g->ticker() != out.ticker) {
      throw Error("concat_month: mixed tickers '" + out.ticker + "' and '" + g->ticker() + "'");
    }
    out.day_boundaries.push_back(out.bits.size());
    out.bits.append(g->cell(level, sample));
  }
  return out;
}

inline MonthlyString concat_month(const std::vector<AggregationGrid>& days, std::size_t level, std::size_t sample,
                                  std::string month = {}) {
  std::vector<const AggregationGrid*> ptrs;
  ptrs.reserve(days.size());
  for (const auto& d : days) ptrs.push_back(&d);
  return concat_month(std::span<const AggregationGrid* const>(ptrs), level, sample, std::move(month));
}

namespace detail {

// Price ratio num/den, compared exactly.
struct Ratio {
  std::int64_t num;
  std::int64_t den;
};

inline bool ratio_less(const Ratio& a, const Ratio& b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

}  // namespace detail

/// Median-balanced bits: every ratio of consecutive (level, sample) subsampled prices is compared
/// with the median ratio M (midpoint of the two central ratios for an even count). 1 above M,
/// 0 below, nothing when equal. Needs the whole day.
inline BitString median_symbolize(std::span<const std::int64_t> prices, std::size_t level, std::size_t sample,
                                  RatioDirection dir = RatioDirection::Canonical) {
  detail::check_cell(level, sample);
  detail::check_positive(prices);
  std::vector<detail::Ratio> ratios;
  for (std::size_t k = sample - 1 + level; k < prices.size(); k += level) {
    const auto now = prices[k];
    const auto before = prices[k - level];
    ratios.push_back(dir == RatioDirection::Canonical ? detail::Ratio{now, before} : detail::Ratio{before, now});
  }
  BitString out;
  if (ratios.empty()) return out;

  std::vector<detail::Ratio> sorted = ratios;
  const std::size_t half = sorted.size() / 2;
  std::nth_element(sorted.begin(), sorted.begin() + half, sorted.end(), detail::ratio_less);
  const detail::Ratio upper = sorted[half];
  // Median as an exact fraction med_num / med_den.
  __int128 med_num = upper.num;
  __int128 med_den = upper.den;
  if (sorted.size() % 2 == 0) {
    const detail::Ratio lower = *std::max_element(sorted.begin(), sorted.begin() + half, detail::ratio_less);
    med_num = static_cast<__int128>(lower.num) * upper.den + static_cast<__int128>(upper.num) * lower.den;
    med_den = static_cast<__int128>(2) * lower.den * upper.den;
  }
  out.reserve(ratios.size());
  for (const auto& r : ratios) {
    // r vs M: r.num * med_den vs med_num * r.den. Prices below 2^31 keep both sides inside 128 bits.
    const __int128 lhs = r.num * med_den;
    const __int128 rhs = med_num * r.den;
    if (lhs == rhs) continue;
    out.push_back(lhs > rhs);
  }
  return out;
}

/// Grid of median-balanced cells, laid out like build_grid.
inline AggregationGrid build_median_grid(std::span<const std::int64_t> prices, std::size_t max_level,
                                         RatioDirection dir = RatioDirection::Canonical, std::string ticker = {},
                                         std::string date = {}, unsigned jobs = 1) {
  if (max_level < 1) throw DomainError("max_level must be >= 1");
  detail::check_positive(prices);
  std::vector<BitString> cells(cell_count(max_level));
  parallel_for(max_level, jobs, [&](std::size_t l0) {
    const std::size_t level = l0 + 1;
    for (std::size_t j = 1; j <= level; ++j) cells[cell_index(level, j)] = median_symbolize(prices, level, j, dir);
  });
  return AggregationGrid(max_level, std::move(cells), std::move(ticker), std::move(date));
}

/// ASCII bit file plus a ".json" sidecar describing where the bits came from.
inline void write_bit_file(const std::filesystem::path& path, const MonthlyString& m,
                           RatioDirection dir = RatioDirection::Canonical) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << m.bits.to_string();
  }
  nlohmann::json side{{"ticker", m.ticker},
                      {"month", m.month},
                      {"level", m.level},
                      {"sample", m.sample},
                      {"length", m.bits.size()},
                      {"day_boundaries", m.day_boundaries},
                      {"ratio_direction", to_string(dir)}};
  std::ofstream out(path.string() + ".json");
  if (!out) throw Error("cannot write sidecar for " + path.string());
  out << side.dump(2) << '\n';
}

}  // namespace tickrand
