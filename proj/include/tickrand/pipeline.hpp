#pragma once

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "tickrand/bitcore.hpp"
#include "tickrand/error.hpp"
#include "tickrand/ingest.hpp"
#include "tickrand/parallel.hpp"
#include "tickrand/rngsrc.hpp"
#include "tickrand/sanity.hpp"
#include "tickrand/stats/registry.hpp"

namespace tickrand {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr double kDefaultPFloor = 1e-300;

struct RunConfig {
  std::filesystem::path data_dir;
  std::vector<std::string> tickers;
  std::vector<std::string> months;  // "YYYY-MM"
  std::size_t max_level = 100;
  std::size_t min_level = 1;
  double alpha = stats::kDefaultAlpha;
  std::vector<std::string> tests;  // empty: the whole registry
  std::optional<Exclusions> exclusions;
  std::string exclusions_source;
  LengthClass length_classes;  // tickers missing here get auto_length_class of their level-1 string
  RatioDirection direction = RatioDirection::Canonical;
  bool median_variant = false;
  std::filesystem::path out_dir;
  unsigned jobs = 1;
  double p_floor = kDefaultPFloor;
  bool missing_fatal = false;
  std::vector<std::string> trading_days;  // expected dates; empty means whatever day files exist
  std::vector<std::uint64_t> seeds;       // recorded only

  void validate() const {
    if (max_level < 1) throw DomainError("max_level must be >= 1");
    if (min_level < 1 || min_level > max_level) throw DomainError("min_level must lie in [1, max_level]");
    if (months.empty()) throw Error("no months given");
    if (tickers.empty()) throw Error("no tickers given");
    if (!(p_floor > 0.0 && p_floor < 1.0)) throw DomainError("p floor must lie in (0, 1)");
    stats::check_alpha(alpha);
  }

  nlohmann::json to_json() const {
    nlohmann::json ex = nullptr;
    if (exclusions) {
      ex = nlohmann::json::object();
      for (const auto& [len, ids] : exclusions->excluded) ex[std::to_string(len)] = ids;
    }
    return {{"data_dir", data_dir.string()},
            {"tickers", tickers},
            {"months", months},
            {"max_level", max_level},
            {"min_level", min_level},
            {"alpha", alpha},
            {"tests", tests},
            {"exclusions", ex},
            {"exclusions_source", exclusions_source},
            {"length_classes", length_classes},
            {"ratio_direction", to_string(direction)},
            {"median_variant", median_variant},
            {"p_floor", p_floor},
            {"missing_fatal", missing_fatal},
            {"trading_days", trading_days},
            {"seeds", seeds}};
  }
};

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of the configuration, excluding the output directory and the degree of parallelism.
inline std::string config_hash(const RunConfig& c) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(c.to_json().dump())));
  return buf;
}

inline void check_month(const std::string& m) {
  const bool shape = m.size() == 7 && m[4] == '-' &&
                     std::all_of(m.begin(), m.begin() + 4, [](char c) { return c >= '0' && c <= '9'; }) &&
                     std::isdigit(static_cast<unsigned char>(m[5])) && std::isdigit(static_cast<unsigned char>(m[6]));
  const int mm = shape ? std::stoi(m.substr(5)) : 0;
  if (mm < 1 || mm > 12) throw Error("month must look like YYYY-MM, got '" + m + "'");
}

inline std::filesystem::path day_file_path(const std::filesystem::path& data_dir, const std::string& ticker,
                                           const std::string& date) {
  return data_dir / ticker / (date + ".csv");
}

/// Day files of a ticker within a calendar month, in date order.
inline std::vector<std::filesystem::path> discover_days(const std::filesystem::path& data_dir, const std::string& ticker,
                                                        const std::string& month) {
  check_month(month);
  std::vector<std::filesystem::path> out;
  const auto dir = data_dir / ticker;
  if (!std::filesystem::is_directory(dir)) return out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.size() == 14 && name.rfind(month + "-", 0) == 0 &&
        entry.path().extension() == ".csv")
      out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Weekdays of a calendar month as "YYYY-MM-DD".
inline std::vector<std::string> weekdays_of(const std::string& month) {
  check_month(month);
  using namespace std::chrono;
  const int y = std::stoi(month.substr(0, 4));
  const unsigned m = static_cast<unsigned>(std::stoi(month.substr(5)));
  const unsigned last = static_cast<unsigned>(year_month_day_last{year{y} / std::chrono::month{m} / std::chrono::last}.day());
  std::vector<std::string> out;
  for (unsigned d = 1; d <= last; ++d) {
    const weekday w{sys_days{year{y} / std::chrono::month{m} / day{d}}};
    if (w == Saturday || w == Sunday) continue;
    char buf[11];
    std::snprintf(buf, sizeof buf, "%s-%02u", month.c_str(), d);
    out.emplace_back(buf);
  }
  return out;
}

struct MonthData {
  std::string ticker;
  std::string month;
  std::vector<std::string> dates;
  std::vector<AggregationGrid> grids;
};

/// Loads the ticker's day files for the month and builds one grid per nonempty day.
inline MonthData load_month(const RunConfig& cfg, const std::string& ticker, const std::string& month,
                            std::vector<std::string>& warnings, bool median = false) {
  const auto files = discover_days(cfg.data_dir, ticker, month);
  std::vector<std::string> missing;
  if (!cfg.trading_days.empty()) {
    for (const auto& d : cfg.trading_days)
      if (d.rfind(month + "-", 0) == 0 && !std::filesystem::exists(day_file_path(cfg.data_dir, ticker, d)))
        missing.push_back(d);
  } else if (files.empty()) {
    missing.push_back(month + " (no day files)");
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& d : missing) list += (list.empty() ? "" : ", ") + d;
    const std::string msg = "ticker " + ticker + ": missing days " + list;
    if (cfg.missing_fatal) throw Error(msg);
    warnings.push_back(msg);
  }
  std::vector<TradeDay> days(files.size());
  parallel_for(files.size(), cfg.jobs, [&](std::size_t i) { days[i] = read_day_file(files[i]); });
  MonthData md{ticker, month, {}, {}};
  std::vector<const TradeDay*> usable;
  for (const auto& d : days) {
    if (d.prices.size() < 2) {
      warnings.push_back("ticker " + ticker + ": day " + d.date + " has fewer than two prices, skipped");
      continue;
    }
    usable.push_back(&d);
    md.dates.push_back(d.date);
  }
  md.grids.resize(usable.size());
  parallel_for(usable.size(), cfg.jobs, [&](std::size_t i) {
    const auto& d = *usable[i];
    md.grids[i] = median ? build_median_grid(d.prices, cfg.max_level, cfg.direction, ticker, d.date)
                         : build_grid(d.prices, cfg.max_level, cfg.direction, ticker, d.date);
  });
  return md;
}

struct ResultRow {
  std::string ticker;
  std::string month;
  std::string test_id;
  std::size_t level = 1;
  std::size_t sample = 1;
  std::size_t n_bits = 0;
  std::optional<double> statistic;
  std::optional<double> p_value;
  std::optional<double> neg_log10_p;
  stats::Decision decision = stats::Decision::Skipped;
};

/// What was run for one (ticker, month).
struct UnitInfo {
  std::string ticker;
  std::string month;
  std::vector<std::string> dates;
  std::size_t length_class = 0;  // 0 when no exclusions were applied
  std::vector<std::string> tests;
};

struct ResultSet {
  std::vector<ResultRow> rows;  // ordered by ticker, month, level, sample, then battery order
  std::vector<UnitInfo> units;
  std::vector<std::string> warnings;
  double p_floor = kDefaultPFloor;
};

inline double neg_log10(double p, double floor) { return -std::log10(std::max(p, floor)); }

inline ResultRow make_row(const std::string& ticker, const std::string& month, std::size_t level, std::size_t sample,
                          const stats::TestResult& r, double floor) {
  ResultRow row{ticker, month, r.spec_id, level, sample, r.n_bits, {}, {}, {}, r.decision};
  if (!r.skipped()) {
    row.statistic = r.statistic;
    row.p_value = r.p_value();
    row.neg_log10_p = neg_log10(r.p_value(), floor);
  }
  return row;
}

/// The battery for a ticker: the registry restricted to the requested tests, minus the tests the
/// sanity check excluded at the ticker's length class.
inline stats::Registry battery_for(const RunConfig& cfg, const std::string& ticker, std::size_t level1_bits,
                                   std::size_t& length_class, std::vector<std::string>& warnings) {
  stats::Registry reg = cfg.tests.empty() ? stats::default_registry() : stats::default_registry().only(cfg.tests);
  length_class = 0;
  if (!cfg.exclusions) return reg;
  LengthClass classes = cfg.length_classes;
  if (!classes.count(ticker)) {
    std::vector<std::size_t> lengths;
    for (const auto& [len, ids] : cfg.exclusions->excluded) lengths.push_back(len);
    classes[ticker] = auto_length_class(level1_bits, lengths);
    warnings.push_back("ticker " + ticker + ": length class " + std::to_string(classes[ticker]) +
                       " chosen from a level-1 length of " + std::to_string(level1_bits));
  }
  length_class = classes[ticker];
  return apply_exclusions(*cfg.exclusions, classes, ticker, reg);
}

/// Rows for every (level, sample) cell of one loaded month.
inline std::vector<ResultRow> run_cells(const RunConfig& cfg, const MonthData& md, const stats::Registry& reg) {
  const std::size_t first = cell_index(cfg.min_level, 1);
  const std::size_t cells = cell_count(cfg.max_level) - first;
  std::vector<std::vector<ResultRow>> slots(cells);
  parallel_for(cells, cfg.jobs, [&](std::size_t c) {
    std::size_t level = cfg.min_level;
    std::size_t offset = first + c;
    while (offset >= cell_index(level + 1, 1)) ++level;
    const std::size_t sample = offset - cell_index(level, 1) + 1;
    const MonthlyString ms = concat_month(md.grids, level, sample, md.month);
    const auto bits = ms.bits.unpack();
    auto& out = slots[c];
    out.reserve(reg.size());
    for (const auto& spec : reg.specs())
      out.push_back(make_row(md.ticker, md.month, level, sample,
                             stats::run_test(spec, std::span<const std::uint8_t>(bits), cfg.alpha), cfg.p_floor));
  });
  std::vector<ResultRow> rows;
  rows.reserve(cells * reg.size());
  for (auto& s : slots)
    for (auto& r : s) rows.push_back(std::move(r));
  return rows;
}

inline std::size_t level1_length(const MonthData& md) {
  std::size_t n = 0;
  for (const auto& g : md.grids) n += g.cell(1, 1).size();
  return n;
}

/// Runs the battery over every configured (ticker, month).
inline ResultSet run_month(const RunConfig& cfg) {
  cfg.validate();
  ResultSet rs;
  rs.p_floor = cfg.p_floor;
  for (const auto& ticker : cfg.tickers)
    for (const auto& month : cfg.months) {
      MonthData md = load_month(cfg, ticker, month, rs.warnings, cfg.median_variant);
      UnitInfo info{ticker, month, md.dates, 0, {}};
      if (md.grids.empty()) {
        rs.units.push_back(std::move(info));
        continue;
      }
      const stats::Registry reg = battery_for(cfg, ticker, level1_length(md), info.length_class, rs.warnings);
      for (const auto& s : reg.specs()) info.tests.push_back(s.id);
      auto rows = run_cells(cfg, md, reg);
      rs.rows.insert(rs.rows.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
      rs.units.push_back(std::move(info));
    }
  return rs;
}

inline std::string csv_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

inline constexpr const char* kResultsHeader =
    "ticker,month,test_id,level,sample,n_bits,statistic,p_value,neg_log10_p,decision";

inline void write_results_csv(std::ostream& out, const std::vector<ResultRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows)
    out << r.ticker << ',' << r.month << ',' << r.test_id << ',' << r.level << ',' << r.sample << ',' << r.n_bits
        << ',' << csv_optional(r.statistic) << ',' << csv_optional(r.p_value) << ',' << csv_optional(r.neg_log10_p)
        << ',' << stats::to_string(r.decision) << '\n';
}

inline std::string results_csv(const ResultSet& rs) {
  std::ostringstream out;
  write_results_csv(out, rs.rows);
  return out.str();
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

inline std::vector<ResultRow> read_results_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw ParseError("empty results file", line_no);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw ParseError("unexpected results header", line_no);
  std::vector<ResultRow> rows;
  auto opt = [](const std::string& s) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    return std::stod(s);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 10) throw ParseError("expected 10 fields", line_no);
    ResultRow r;
    try {
      r.ticker = f[0];
      r.month = f[1];
      r.test_id = f[2];
      r.level = std::stoul(f[3]);
      r.sample = std::stoul(f[4]);
      r.n_bits = std::stoul(f[5]);
      r.statistic = opt(f[6]);
      r.p_value = opt(f[7]);
      r.neg_log10_p = opt(f[8]);
    } catch (const std::exception&) {
      throw ParseError("bad numeric field", line_no);
    }
    if (f[9] == "pass") r.decision = stats::Decision::Pass;
    else if (f[9] == "reject") r.decision = stats::Decision::Reject;
    else if (f[9] == "skip") r.decision = stats::Decision::Skipped;
    else throw ParseError("bad decision '" + f[9] + "'", line_no);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json manifest_json(const RunConfig& cfg, const ResultSet& rs) {
  nlohmann::json units = nlohmann::json::array();
  for (const auto& u : rs.units)
    units.push_back({{"ticker", u.ticker},
                     {"month", u.month},
                     {"days", u.dates.size()},
                     {"dates", u.dates},
                     {"length_class", u.length_class},
                     {"tests", u.tests}});
  return {{"version", kVersion},   {"config", cfg.to_json()}, {"config_hash", config_hash(cfg)},
          {"seeds", cfg.seeds},    {"p_floor", rs.p_floor},   {"rows", rs.rows.size()},
          {"units", units},        {"warnings", rs.warnings}};
}

/// Writes results.csv and manifest.json under the output directory.
inline void write_run(const RunConfig& cfg, const ResultSet& rs) {
  std::filesystem::create_directories(cfg.out_dir);
  {
    std::ofstream out(cfg.out_dir / "results.csv", std::ios::binary);
    if (!out) throw Error("cannot write results under " + cfg.out_dir.string());
    write_results_csv(out, rs.rows);
  }
  std::ofstream out(cfg.out_dir / "manifest.json");
  out << manifest_json(cfg, rs).dump(2) << '\n';
}

/// Linear-interpolation quantile (type 7) of sorted data.
inline double quantile7(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw DomainError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

struct BoxplotRow {
  std::string ticker;
  std::string month;
  std::string test_id;
  std::size_t level = 1;
  std::size_t samples = 0;  // non-skipped samples
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  bool skipped() const { return samples == 0; }
};

/// Quartiles of −log10 p over the samples of each (ticker, month, test, level), in first-seen order.
inline std::vector<BoxplotRow> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw Error("no results to summarize");
  std::vector<BoxplotRow> out;
  std::vector<std::vector<double>> values;
  std::map<std::tuple<std::string, std::string, std::string, std::size_t>, std::size_t> index;
  for (const auto& r : rows) {
    auto key = std::make_tuple(r.ticker, r.month, r.test_id, r.level);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      out.push_back({r.ticker, r.month, r.test_id, r.level});
      values.emplace_back();
    }
    if (r.decision != stats::Decision::Skipped && r.neg_log10_p) values[it->second].push_back(*r.neg_log10_p);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto& v = values[i];
    std::sort(v.begin(), v.end());
    out[i].samples = v.size();
    if (v.empty()) continue;
    out[i].min = v.front();
    out[i].q1 = quantile7(v, 0.25);
    out[i].median = quantile7(v, 0.5);
    out[i].q3 = quantile7(v, 0.75);
    out[i].max = v.back();
  }
  // Group each test's levels together, tests in first-seen order.
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> rank;
  for (const auto& b : out) rank.emplace(std::make_tuple(b.ticker, b.month, b.test_id), rank.size());
  std::stable_sort(out.begin(), out.end(), [&](const BoxplotRow& a, const BoxplotRow& b) {
    const auto ra = rank.at({a.ticker, a.month, a.test_id});
    const auto rb = rank.at({b.ticker, b.month, b.test_id});
    return ra != rb ? ra < rb : a.level < b.level;
  });
  return out;
}

inline std::vector<BoxplotRow> summarize(const ResultSet& rs) { return summarize(rs.rows); }

inline void write_boxplot_csv(std::ostream& out, const std::vector<BoxplotRow>& rows) {
  out << "ticker,month,test_id,level,samples,min,q1,median,q3,max,status\n";
  for (const auto& b : rows) {
    out << b.ticker << ',' << b.month << ',' << b.test_id << ',' << b.level << ',' << b.samples;
    if (b.skipped()) {
      out << ",,,,,,skip\n";
      continue;
    }
    out << ',' << format_double(b.min) << ',' << format_double(b.q1) << ',' << format_double(b.median) << ','
        << format_double(b.q3) << ',' << format_double(b.max) << ",ok\n";
  }
}

struct ExportOptions {
  std::size_t level = 100;
  std::size_t sample = 1;
  bool all_samples = false;  // concatenate samples 1..level instead of one sample
  std::size_t min_level = 1;
};

struct ExportResult {
  BitString bits;
  std::vector<std::string> certifying_tests;
  nlohmann::json metadata;
};

/// Certified bits for (ticker, month, level): the battery must have no rejection on any exported
/// sample string, otherwise ExportRefused lists the failing tests.
inline ExportResult export_bits(const RunConfig& cfg, const std::string& ticker, const std::string& month,
                                const ExportOptions& opt) {
  if (opt.level < opt.min_level)
    throw ExportRefused("level " + std::to_string(opt.level) + " is below the minimum export level " +
                            std::to_string(opt.min_level),
                        {});
  if (opt.level > cfg.max_level) throw DomainError("export level exceeds max_level");
  if (!opt.all_samples && (opt.sample < 1 || opt.sample > opt.level)) throw DomainError("sample must lie in [1, level]");
  RunConfig c = cfg;
  c.max_level = opt.level;
  std::vector<std::string> warnings;
  const MonthData md = load_month(c, ticker, month, warnings, cfg.median_variant);
  if (md.grids.empty()) throw Error("no usable days for " + ticker + " " + month);
  std::size_t length_class = 0;
  const stats::Registry reg = battery_for(c, ticker, level1_length(md), length_class, warnings);

  const std::size_t first = opt.all_samples ? 1 : opt.sample;
  const std::size_t last = opt.all_samples ? opt.level : opt.sample;
  std::vector<MonthlyString> strings(last - first + 1);
  std::vector<std::vector<stats::TestResult>> results(strings.size());
  parallel_for(strings.size(), cfg.jobs, [&](std::size_t i) {
    strings[i] = concat_month(md.grids, opt.level, first + i, month);
    results[i] = stats::run_battery(strings[i].bits, reg, cfg.alpha);
  });

  std::vector<std::string> failing;
  std::vector<std::string> certifying;
  for (std::size_t t = 0; t < reg.size(); ++t) {
    bool ran = false, rejected = false;
    for (const auto& r : results) {
      ran |= !r[t].skipped();
      rejected |= r[t].decision == stats::Decision::Reject;
    }
    if (rejected) failing.push_back(reg.specs()[t].id);
    else if (ran) certifying.push_back(reg.specs()[t].id);
  }
  if (!failing.empty()) {
    std::string list;
    for (const auto& f : failing) list += (list.empty() ? "" : ", ") + f;
    throw ExportRefused("battery rejected " + ticker + " " + month + " at level " + std::to_string(opt.level) +
                            ": " + list,
                        failing);
  }
  if (certifying.empty()) throw ExportRefused("no test could certify the string", {});

  ExportResult res;
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& s : strings) {
    parts.push_back({{"sample", s.sample}, {"offset", res.bits.size()}, {"length", s.bits.size()},
                     {"day_boundaries", s.day_boundaries}});
    res.bits.append(s.bits);
  }
  res.certifying_tests = certifying;
  res.metadata = {{"version", kVersion},
                  {"ticker", ticker},
                  {"month", month},
                  {"level", opt.level},
                  {"samples", parts},
                  {"dates", md.dates},
                  {"n_bits", res.bits.size()},
                  {"certifying_tests", certifying},
                  {"alpha", cfg.alpha},
                  {"length_class", length_class},
                  {"ratio_direction", to_string(cfg.direction)},
                  {"median_variant", cfg.median_variant},
                  {"config_hash", config_hash(cfg)},
                  {"warnings", warnings}};
  return res;
}

/// Writes the bits as ASCII and the metadata as a ".json" sidecar.
inline void write_export(const std::filesystem::path& path, const ExportResult& r) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_bits_ascii(path, r.bits);
  std::ofstream out(path.string() + ".json");
  if (!out) throw Error("cannot write sidecar for " + path.string());
  out << r.metadata.dump(2) << '\n';
}

struct VariantRow {
  std::string ticker;
  std::string month;
  std::string test_id;
  std::size_t level = 1;
  std::size_t sample = 1;
  ResultRow base;
  ResultRow median;
};

/// The same battery on the plain and the median-balanced grids, paired per (test, level, sample).
inline std::vector<VariantRow> compare_variants(const RunConfig& cfg, const std::string& ticker, const std::string& month) {
  RunConfig c = cfg;
  c.tickers = {ticker};
  c.months = {month};
  c.median_variant = false;
  const ResultSet base = run_month(c);
  c.median_variant = true;
  const ResultSet med = run_month(c);
  if (base.rows.size() != med.rows.size()) throw Error("variant runs produced different row sets");
  std::vector<VariantRow> out;
  out.reserve(base.rows.size());
  for (std::size_t i = 0; i < base.rows.size(); ++i) {
    const auto& b = base.rows[i];
    const auto& m = med.rows[i];
    if (b.test_id != m.test_id || b.level != m.level || b.sample != m.sample)
      throw Error("variant runs are not aligned");
    out.push_back({ticker, month, b.test_id, b.level, b.sample, b, m});
  }
  return out;
}

inline void write_variants_csv(std::ostream& out, const std::vector<VariantRow>& rows) {
  out << "ticker,month,test_id,level,sample,base_n_bits,base_p_value,base_decision,median_n_bits,median_p_value,"
         "median_decision\n";
  for (const auto& r : rows)
    out << r.ticker << ',' << r.month << ',' << r.test_id << ',' << r.level << ',' << r.sample << ','
        << r.base.n_bits << ',' << csv_optional(r.base.p_value) << ',' << stats::to_string(r.base.decision) << ','
        << r.median.n_bits << ',' << csv_optional(r.median.p_value) << ',' << stats::to_string(r.median.decision)
        << '\n';
}

struct SyntheticMonth {
  std::string ticker = "SYN";
  std::string month = "2024-03";
  std::size_t days = 20;
  std::size_t ticks_per_day = 50000;
  std::uint64_t seed = 1;
  WalkParams walk;                   // rho, tick, s0, zero_prob; seed and n are set per day
  std::optional<double> up_prob;     // drifting walk instead of the persistent one
};

/// Writes day files for the first `days` weekdays of the month. Each day has its own seed drawn
/// from a generator seeded with `seed`, so days are independent and reproducible.
inline std::vector<std::string> write_synthetic_month(const std::filesystem::path& data_dir, const SyntheticMonth& s) {
  auto dates = weekdays_of(s.month);
  if (dates.size() < s.days)
    throw Error(s.month + " has only " + std::to_string(dates.size()) + " weekdays, asked for " + std::to_string(s.days));
  dates.resize(s.days);
  SplitMix64 seeds(s.seed);
  for (const auto& date : dates) {
    const std::uint64_t day_seed = seeds.next();
    TradeDay day{s.ticker, date, {}, {}};
    if (s.up_prob) {
      day.prices = biased_walk(day_seed, s.ticks_per_day, *s.up_prob, s.walk.tick, s.walk.s0).prices;
    } else {
      WalkParams p = s.walk;
      p.seed = day_seed;
      p.n = s.ticks_per_day;
      day.prices = persistent_walk(p).prices;
    }
    write_day_file(day_file_path(data_dir, s.ticker, date), day);
  }
  return dates;
}

}  // namespace tickrand
