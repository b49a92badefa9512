// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tickrand/tickrand.hpp"

using namespace tickrand;
namespace fs = std::filesystem;

namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("tickrand_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// 1. Rejection rate of every test on fair bits.
Check calibration() {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto& reg = stats::default_registry();
  std::vector<std::size_t> rejects(reg.size(), 0), evals(reg.size(), 0);
  std::vector<std::vector<std::uint8_t>> strings(100);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    // 100 strings of 10^5 bits per seed, cut from one stream.
    const auto stream = prng_bits(seed, 100 * 100000);
    std::vector<std::vector<std::size_t>> rej(strings.size(), std::vector<std::size_t>(reg.size(), 0));
    std::vector<std::vector<std::size_t>> ev(strings.size(), std::vector<std::size_t>(reg.size(), 0));
    parallel_for(strings.size(), default_jobs(), [&](std::size_t s) {
      const auto bits = stream.slice(s * 100000, 100000).unpack();
      for (std::size_t t = 0; t < reg.size(); ++t) {
        const auto r = stats::run_test(reg.specs()[t], std::span<const std::uint8_t>(bits));
        if (r.skipped()) continue;
        ++ev[s][t];
        rej[s][t] += r.decision == stats::Decision::Reject;
      }
    });
    for (std::size_t s = 0; s < strings.size(); ++s)
      for (std::size_t t = 0; t < reg.size(); ++t) {
        rejects[t] += rej[s][t];
        evals[t] += ev[s][t];
      }
  }
  double lo = 1.0, hi = 0.0;
  std::string lo_id, hi_id;
  for (std::size_t t = 0; t < reg.size(); ++t) {
    const auto& id = reg.specs()[t].id;
    c.require(evals[t] >= 1000, id + " evaluated " + std::to_string(evals[t]) + " times");
    const double rate = evals[t] ? static_cast<double>(rejects[t]) / static_cast<double>(evals[t]) : 0.0;
    c.require(rate >= 0.001 && rate <= 0.025, id + " rejection rate " + std::to_string(rate));
    if (rate < lo) lo = rate, lo_id = id;
    if (rate > hi) hi = rate, hi_id = id;
  }
  const double secs = seconds_since(t0);
  c.require(secs <= 600.0, "runtime " + std::to_string(secs) + " s");
  c.detail << " rates in [" << lo << " (" << lo_id << "), " << hi << " (" << hi_id << ")] over "
           << evals.front() << " strings each, " << std::lround(secs) << " s";
  return c;
}

// 2. Sanity protocol on the two reference generators, and the threshold boundary.
Check sanity_threshold() {
  Check c;
  SanityOptions opt;
  opt.lengths = {50000, 100000};
  opt.jobs = default_jobs();
  const std::vector<GeneratorSpec> gens{{GeneratorKind::DocumentedPrng, 1, {}, {}}, {GeneratorKind::Mobius, 0, {}, {}}};
  const auto t0 = std::chrono::steady_clock::now();
  const SanityReport rep = run_sanity(gens, opt);
  for (const auto& e : rep.entries) {
    if (e.verdict == Verdict::Valid)
      c.require(e.pooled.fraction() <= 0.02, e.test_id + " valid with fraction " + std::to_string(e.pooled.fraction()));
    else
      c.require(e.pooled.total == 0 || e.pooled.fraction() > 0.02, e.test_id + " excluded below threshold");
    c.require(e.pooled.total <= 2 * 5050, e.test_id + " total exceeds generators x 5050");
  }
  SanityEntry at{"boundary", 50000, {101, 5050}, {}, 0, Verdict::Valid, ExclusionReason::None};
  SanityEntry over{"boundary", 50000, {102, 5050}, {}, 0, Verdict::Valid, ExclusionReason::None};
  assign_verdict(at, 0.02, false);
  assign_verdict(over, 0.02, false);
  c.require(at.verdict == Verdict::Valid, "101/5050 (2.0%) kept");
  c.require(over.verdict == Verdict::Excluded, "102/5050 (2.02%) excluded");
  for (std::size_t len : opt.lengths) {
    const auto ex = rep.excluded_at(len);
    c.detail << " excluded@" << len << "={";
    bool first = true;
    for (const auto& id : ex) c.detail << (first ? "" : ",") << id, first = false;
    c.detail << "}";
  }
  c.detail << ", " << std::lround(seconds_since(t0)) << " s";
  return c;
}

// 3. Entropy statistics against a map-based frequency and contingency computation.
double oracle_y1(const std::vector<std::uint8_t>& bits, unsigned k) {
  std::map<std::vector<std::uint8_t>, double> freq;
  const std::size_t blocks = bits.size() / k;
  for (std::size_t b = 0; b < blocks; ++b) freq[std::vector<std::uint8_t>(bits.begin() + b * k, bits.begin() + (b + 1) * k)] += 1;
  double h = 0.0;
  for (const auto& [key, f] : freq) h -= f / blocks * std::log(f / blocks);
  return 2.0 * blocks * (k * std::numbers::ln2 - h);
}

double oracle_y2(const std::vector<std::uint8_t>& bits, unsigned k) {
  std::map<std::pair<std::vector<std::uint8_t>, int>, double> joint;
  std::map<std::vector<std::uint8_t>, double> row;
  std::map<int, double> col;
  const std::size_t windows = bits.size() - k + 1;
  for (std::size_t i = 0; i < windows; ++i) {
    std::vector<std::uint8_t> prefix(bits.begin() + i, bits.begin() + i + k - 1);
    const int next = bits[i + k - 1];
    joint[{prefix, next}] += 1;
    row[prefix] += 1;
    col[next] += 1;
  }
  double g = 0.0;
  for (const auto& [key, f] : joint) g += f * std::log(f * windows / (row[key.first] * col[key.second]));
  return 2.0 * g;
}

Check entropy_oracles() {
  Check c;
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 16 + rng() % 497;
    std::vector<std::uint8_t> bits(n);
    for (auto& b : bits) b = rng() & 1;
    if (rep % 2)
      for (std::size_t i = 1; i < n; ++i)
        if (rng() % 3 == 0) bits[i] = bits[i - 1];
    const unsigned k = stats::block_length(n);
    const auto bs = BitString::from_bytes(bits);
    const double y1 = stats::shannon_entropy_test(bs).statistic, r1 = oracle_y1(bits, k);
    const double y2 = stats::kl_independence_test(bs).statistic, r2 = oracle_y2(bits, k);
    const double e1 = std::abs(y1 - r1) / std::max(std::abs(r1), 1e-300);
    const double e2 = std::abs(y2 - r2) / std::max(std::abs(r2), 1e-300);
    // A statistic of exactly zero has no relative error to speak of; require an exact match.
    c.require(r1 == 0.0 ? y1 == 0.0 : e1 <= 1e-10, "Y1 on string " + std::to_string(rep));
    c.require(r2 == 0.0 ? std::abs(y2) <= 1e-12 : e2 <= 1e-10, "Y2 on string " + std::to_string(rep));
    worst = std::max({worst, r1 == 0.0 ? 0.0 : e1, r2 == 0.0 ? 0.0 : e2});
  }
  const auto zeros = BitString::from_string(std::string(16, '0'));
  c.require(stats::shannon_entropy_test(zeros).statistic == 32.0 * std::numbers::ln2, "all-zeros Y1 = 32 ln 2");
  c.require(stats::kl_independence_test(zeros).statistic == 0.0, "all-zeros Y2 = 0");
  c.detail << " worst relative error " << worst << " over 100 strings";
  return c;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += rx[i] / n, my += ry[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// 4. Aggregation whitens a persistent walk.
Check whitening() {
  Check c;
  const auto dir = scratch("whitening");
  SyntheticMonth s;
  s.days = 20;
  s.ticks_per_day = 50000;
  s.seed = 1;
  s.walk.rho = 0.7;
  s.walk.zero_prob = 0.7;
  write_synthetic_month(dir, s);
  RunConfig cfg;
  cfg.data_dir = dir;
  cfg.tickers = {s.ticker};
  cfg.months = {s.month};
  cfg.tests = {"Runs", "Serial", "KL"};
  cfg.jobs = default_jobs();
  const auto box = summarize(run_month(cfg));
  c.detail << " walk rho=" << s.walk.rho << " zero_prob=" << s.walk.zero_prob << ";";
  for (const auto& id : cfg.tests) {
    std::vector<double> level, median;
    for (const auto& b : box)
      if (b.test_id == id && !b.skipped()) {
        level.push_back(static_cast<double>(b.level));
        median.push_back(b.median);
      }
    if (level.size() != 100) {
      c.require(false, id + " has " + std::to_string(level.size()) + " levels with results");
      continue;
    }
    const double rho = spearman(level, median);
    c.require(rho <= -0.8, id + " Spearman " + std::to_string(rho));
    c.require(median.front() > 2.0, id + " median at level 1 = " + std::to_string(median.front()));
    c.require(median.back() < 2.0, id + " median at level 100 = " + std::to_string(median.back()));
    char buf[160];
    std::snprintf(buf, sizeof buf, " %s: rho_s=%.3f med(l=1)=%.1f med(l=100)=%.2f;", id.c_str(), rho, median.front(),
                  median.back());
    c.detail << buf;
  }
  fs::remove_all(dir);
  return c;
}

// 5. Grid size and the phase partition, checked cell by cell against the index arithmetic.
Check grid() {
  Check c;
  std::mt19937_64 rng(77);
  std::size_t checked = 0;
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t n = 1000 + rng() % 2000;
    // Strictly distinct prices so that every comparison emits a bit.
    std::vector<std::int64_t> prices(n);
    std::set<std::int64_t> used;
    for (auto& p : prices) {
      do p = 1000000 + static_cast<std::int64_t>(rng() % 1000000);
      while (!used.insert(p).second);
    }
    const auto g = build_grid(prices, 100);
    c.require(g.size() == 5050, "grid size " + std::to_string(g.size()));
    for (std::size_t l = 1; l <= 100; ++l) {
      std::vector<int> owner(n, 0);
      std::size_t bits = 0;
      for (std::size_t j = 1; j <= l; ++j) {
        const auto cell = g.cell(l, j);
        std::size_t i = 0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k < l || (k - l) % l != j - 1) continue;
          ++owner[k];
          if (i >= cell.size() || cell[i] != (prices[k] > prices[k - l])) {
            c.require(false, "cell (" + std::to_string(l) + "," + std::to_string(j) + ") content");
            break;
          }
          ++i;
        }
        c.require(i == cell.size(), "cell (" + std::to_string(l) + "," + std::to_string(j) + ") length");
        bits += cell.size();
        ++checked;
      }
      for (std::size_t k = 0; k < n; ++k)
        if (owner[k] != (k >= l ? 1 : 0)) {
          c.require(false, "index " + std::to_string(k) + " at level " + std::to_string(l));
          break;
        }
      c.require(bits == n - l, "level " + std::to_string(l) + " bit total");
    }
  }
  c.detail << " " << checked << " cells over 5 random paths";
  return c;
}

// 6. Median-balanced symbolization.
Check median_balance() {
  Check c;
  std::mt19937_64 rng(99);
  std::size_t worst = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t n = 2 + rng() % 400;
    std::vector<std::int64_t> prices(n);
    std::set<std::int64_t> used;
    // Distinct random prices make tied ratios vanishingly rare; a tie would show up as a dropped bit.
    for (auto& p : prices) {
      do p = 1'000'000 + static_cast<std::int64_t>(rng() % 100'000'000);
      while (!used.insert(p).second);
    }
    const std::size_t level = 1 + rng() % 10;
    const std::size_t sample = 1 + rng() % level;
    const auto b = median_symbolize(prices, level, sample);
    const auto ones = static_cast<long long>(b.count_ones()), zeros = static_cast<long long>(b.count_zeros());
    worst = std::max(worst, static_cast<std::size_t>(std::abs(ones - zeros)));
  }
  c.require(worst <= 1, "|#0-#1| reached " + std::to_string(worst));

  const auto dir = scratch("median");
  SyntheticMonth s;
  s.days = 20;
  s.ticks_per_day = 50000;
  s.up_prob = 0.55;
  write_synthetic_month(dir, s);
  RunConfig cfg;
  cfg.data_dir = dir;
  cfg.tickers = {s.ticker};
  cfg.months = {s.month};
  cfg.tests = {"ArithmeticMean"};
  cfg.max_level = 1;
  const auto rows = compare_variants(cfg, s.ticker, s.month);
  const auto& r = rows.front();
  c.require(r.base.p_value && *r.base.p_value < 1e-6, "base variant p-value not below 1e-6");
  c.require(r.median.decision == stats::Decision::Pass, "median variant does not pass");
  c.detail << " worst imbalance " << worst << " on 1000 paths; drift walk (up 0.55): base p=" << r.base.p_value.value_or(-1)
           << ", median p=" << r.median.p_value.value_or(-1);
  fs::remove_all(dir);
  return c;
}

// 7. Certified export at level 100.
Check export_level100() {
  Check c;
  const auto dir = scratch("export");
  SyntheticMonth s;
  s.days = 20;
  s.ticks_per_day = 50000;
  s.seed = 1;
  s.walk.rho = 0.5;
  write_synthetic_month(dir, s);
  RunConfig cfg;
  cfg.data_dir = dir;
  cfg.tickers = {s.ticker};
  cfg.months = {s.month};
  cfg.jobs = default_jobs();
  ExportOptions opt;
  opt.level = 100;
  // Comparisons and ties of sample 1 at lag 100, counted straight from the day files.
  std::size_t comparisons = 0, ties = 0;
  for (const auto& f : discover_days(dir, s.ticker, s.month)) {
    const auto day = read_day_file(f);
    for (std::size_t k = 100; k < day.prices.size(); k += 100) {
      ++comparisons;
      ties += day.prices[k] == day.prices[k - 100];
    }
  }
  try {
    const auto res = export_bits(cfg, s.ticker, s.month, opt);
    c.require(res.bits.size() + ties == comparisons, "bit count " + std::to_string(res.bits.size()) + " + ties " +
                                                         std::to_string(ties) + " != " + std::to_string(comparisons));
    c.require(std::abs(static_cast<double>(res.bits.size()) - 10000.0) <= static_cast<double>(ties) + 20.0,
              "bit count outside 10000 +- ties");
    std::size_t ran = 0;
    for (const auto& r : stats::run_battery(res.bits, stats::default_registry())) {
      if (r.skipped()) continue;
      ++ran;
      c.require(r.decision == stats::Decision::Pass, r.spec_id + " rejects the exported bits");
    }
    c.detail << " " << res.bits.size() << " bits (" << ties << " ties, " << res.bits.size() / 20.0 << "/day), " << ran
             << " tests re-pass";
  } catch (const ExportRefused& e) {
    c.require(false, std::string("export refused: ") + e.what());
  }
  fs::remove_all(dir);
  return c;
}

// 8. Byte-identical results at parallelism 1 and 8.
Check determinism() {
  Check c;
  const auto dir = scratch("determinism");
  SyntheticMonth s;
  s.days = 20;
  s.ticks_per_day = 5000;
  s.seed = 42;
  s.walk.rho = 0.6;
  write_synthetic_month(dir / "a", s);
  write_synthetic_month(dir / "b", s);
  RunConfig cfg;
  cfg.tickers = {s.ticker};
  cfg.months = {s.month};
  cfg.data_dir = dir / "a";
  cfg.jobs = 1;
  const auto one = results_csv(run_month(cfg));
  cfg.data_dir = dir / "b";
  cfg.jobs = 8;
  const auto eight = results_csv(run_month(cfg));
  c.require(one == eight, "CSV differs between parallelism 1 and 8");
  c.require(!one.empty(), "empty CSV");
  c.detail << " " << std::count(one.begin(), one.end(), '\n') - 1 << " rows, " << one.size() << " bytes, identical";
  fs::remove_all(dir);
  return c;
}

int mu_by_factoring(std::size_t n) {
  int sign = 1;
  for (std::size_t p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    n /= p;
    if (n % p == 0) return 0;
    sign = -sign;
  }
  if (n > 1) sign = -sign;
  return sign;
}

// 9. Möbius generator.
Check mobius() {
  Check c;
  const auto mu = mobius_values(10000);
  std::size_t mismatches = 0;
  for (std::size_t n = 1; n <= 10000; ++n) mismatches += mu[n] != mu_by_factoring(n);
  c.require(mismatches == 0, std::to_string(mismatches) + " values differ from factorization");
  const std::size_t n_max = 1'000'000;
  const auto bits = mobius_stream(n_max);
  const auto all = mobius_values(n_max);
  const auto squarefree = static_cast<std::size_t>(std::count_if(all.begin() + 1, all.end(), [](auto v) { return v != 0; }));
  const double expected = 6.0 / (std::numbers::pi * std::numbers::pi) * static_cast<double>(n_max);
  c.require(bits.size() == squarefree, "bit count differs from the squarefree count");
  const double rel = std::abs(static_cast<double>(bits.size()) - expected) / expected;
  c.require(rel <= 0.005, "bit count off 6N/pi^2 by " + std::to_string(rel));
  c.detail << " mu matches to 1e4; " << bits.size() << " bits up to 1e6, 6N/pi^2=" << std::lround(expected)
           << " (rel " << rel << ")";
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria = {
      {"calibration", calibration},         {"sanity-threshold", sanity_threshold}, {"entropy-oracles", entropy_oracles},
      {"whitening", whitening},             {"grid-combinatorics", grid},          {"median-balance", median_balance},
      {"bit-export", export_level100},      {"determinism", determinism},          {"mobius", mobius},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " [exception: " << e.what() << "]";
    }
    failed += !c.ok;
    std::printf("%zu %-20s %s%s\n", i + 1, criteria[i].first.c_str(), c.ok ? "PASS" : "FAIL", c.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
