#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tickrand/tickrand.hpp"

namespace fs = std::filesystem;
using namespace tickrand;

namespace {

struct Globals {
  double alpha = stats::kDefaultAlpha;
  std::size_t max_level = 100;
  std::vector<std::string> tests;
  std::string exclusions;
  std::string direction = "canonical";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  std::string out;
};

std::vector<std::string> split(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

// Writes to the named file, or to stdout when the name is empty or "-".
template <typename Fn>
void with_output(const std::string& path, Fn&& fn) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  fn(out);
}

RunConfig base_config(const Globals& g, const std::string& data) {
  RunConfig c;
  c.data_dir = data;
  c.max_level = g.max_level;
  c.alpha = g.alpha;
  c.tests = g.tests;
  c.direction = parse_ratio_direction(g.direction);
  c.jobs = g.jobs;
  c.out_dir = g.out.empty() ? fs::path("out") : fs::path(g.out);
  if (!g.exclusions.empty()) {
    c.exclusions = Exclusions::load(g.exclusions);
    c.exclusions_source = g.exclusions;
  }
  return c;
}

LengthClass parse_length_classes(const std::vector<std::string>& items) {
  LengthClass out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error("length class must look like TICKER=LENGTH, got '" + item + "'");
    out[item.substr(0, eq)] = std::stoul(item.substr(eq + 1));
  }
  return out;
}

GeneratorSpec parse_generator(const std::string& text, std::uint64_t default_seed) {
  GeneratorSpec g;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "file" || kind == "file-bits") {
    g.kind = GeneratorKind::FileBits;
    g.path = arg;
    return g;
  }
  g.kind = parse_generator_kind(kind);
  g.seed = arg.empty() ? default_seed : std::stoull(arg);
  return g;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomness testing of aggregated tick-by-tick price series"};
  app.require_subcommand(1);
  Globals g;
  std::string tests_csv;
  app.add_option("--alpha", g.alpha, "Significance level")->capture_default_str();
  app.add_option("--max-level", g.max_level, "Largest aggregation level L")->capture_default_str();
  app.add_option("--tests", tests_csv, "Comma-separated test ids (default: all)");
  app.add_option("--exclusions", g.exclusions, "Exclusion file written by 'sanity'");
  app.add_option("--ratio-direction", g.direction, "canonical (p_t/p_t-l) or reciprocal")->capture_default_str();
  app.add_option("--seed", g.seed, "Seed for generated data")->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads")->capture_default_str();
  app.add_option("--out", g.out, "Output file or directory");
  app.fallthrough();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Convert message files to day files");
  std::vector<std::string> ingest_files;
  std::string ingest_data = "data", ingest_ticker, ingest_date, open_time = "09:30", close_time = "16:00";
  std::string columns, exec_codes;
  bool no_session = false;
  ingest->add_option("files", ingest_files, "Message files")->required();
  ingest->add_option("--data", ingest_data, "Data directory")->capture_default_str();
  ingest->add_option("--ticker", ingest_ticker, "Ticker (default: from the file name)");
  ingest->add_option("--date", ingest_date, "Date YYYY-MM-DD (default: from the file name)");
  ingest->add_option("--open", open_time)->capture_default_str();
  ingest->add_option("--close", close_time)->capture_default_str();
  ingest->add_flag("--all-hours", no_session, "Keep executions outside the session");
  ingest->add_option("--columns", columns, "Column order, e.g. time,type,order_id,size,price,direction");
  ingest->add_option("--exec-codes", exec_codes, "Event types that count as executions, e.g. 4,5");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate bits, values or a synthetic month");
  std::string gen_kind = "documented-prng", gen_format = "ascii", gen_month, gen_ticker = "SYN", gen_data;
  std::size_t gen_n = 100000, gen_days = 20, gen_ticks = 50000;
  double gen_rho = 0.5, gen_zero = 0.0;
  std::optional<double> gen_up;
  std::int64_t gen_tick = 1, gen_s0 = 1'000'000;
  gen->add_option("--kind", gen_kind, "documented-prng, mobius, persistent-walk or biased-walk")->capture_default_str();
  gen->add_option("--n", gen_n, "Bits (bit sources) or prices (walks)")->capture_default_str();
  gen->add_option("--format", gen_format, "ascii, binary or values")->capture_default_str();
  gen->add_option("--rho", gen_rho)->capture_default_str();
  gen->add_option("--zero-prob", gen_zero)->capture_default_str();
  gen->add_option("--up-prob", gen_up, "Up-move probability of the biased walk");
  gen->add_option("--tick", gen_tick)->capture_default_str();
  gen->add_option("--s0", gen_s0)->capture_default_str();
  gen->add_option("--month", gen_month, "Write a synthetic month of day files instead");
  gen->add_option("--days", gen_days)->capture_default_str();
  gen->add_option("--ticks", gen_ticks, "Prices per synthetic day")->capture_default_str();
  gen->add_option("--ticker", gen_ticker)->capture_default_str();
  gen->add_option("--data", gen_data, "Data directory for --month");

  // symbolize
  auto* sym = app.add_subcommand("symbolize", "Write the monthly string of one (level, sample) cell");
  std::string sym_data = "data", sym_ticker, sym_month, sym_day;
  std::size_t sym_level = 1, sym_sample = 1;
  bool sym_median = false;
  sym->add_option("--data", sym_data)->capture_default_str();
  sym->add_option("--ticker", sym_ticker);
  sym->add_option("--month", sym_month);
  sym->add_option("--day-file", sym_day, "Symbolize a single day file instead of a month");
  sym->add_option("--level", sym_level)->capture_default_str();
  sym->add_option("--sample", sym_sample)->capture_default_str();
  sym->add_flag("--median", sym_median, "Median-balanced symbolization");

  // sanity
  auto* san = app.add_subcommand("sanity", "Run the battery on reference generators and decide test validity");
  std::vector<std::string> san_generators{"documented-prng", "mobius"};
  std::string san_lengths;
  double san_threshold = 0.02;
  bool san_worst = false;
  san->add_option("--generators", san_generators, "documented-prng[:seed], mobius, file:PATH, persistent-walk[:seed]")
      ->delimiter(',')
      ->capture_default_str();
  san->add_option("--lengths", san_lengths, "Comma-separated lengths (default 50000,100000,500000,1000000)");
  san->add_option("--threshold", san_threshold)->capture_default_str();
  san->add_flag("--worst-case", san_worst, "Judge by the worst generator instead of the pooled count");

  // run
  auto* run = app.add_subcommand("run", "Run the battery over months of day files");
  std::string run_data = "data", run_tickers, run_months, run_days_file;
  std::vector<std::string> run_classes;
  std::size_t run_min_level = 1;
  bool run_median = false, run_missing_fatal = false;
  run->add_option("--data", run_data)->capture_default_str();
  run->add_option("--tickers", run_tickers)->required();
  run->add_option("--months", run_months, "Comma-separated YYYY-MM")->required();
  run->add_option("--min-level", run_min_level)->capture_default_str();
  run->add_flag("--median", run_median, "Use median-balanced symbolization");
  run->add_option("--length-class", run_classes, "TICKER=LENGTH; default from the level-1 length")->delimiter(',');
  run->add_flag("--missing-fatal", run_missing_fatal, "Fail instead of warning on missing days");
  run->add_option("--trading-days", run_days_file, "File with expected dates, one per line");

  // summarize
  auto* sum = app.add_subcommand("summarize", "Boxplot quartiles of -log10 p per level");
  std::string sum_results;
  sum->add_option("results", sum_results, "results.csv from 'run'")->required();

  // export-bits
  auto* exp = app.add_subcommand("export-bits", "Export certified bits of one month at one level");
  std::string exp_data = "data", exp_ticker, exp_month;
  std::size_t exp_level = 100, exp_sample = 1, exp_min_level = 1;
  bool exp_all = false, exp_median = false;
  exp->add_option("--data", exp_data)->capture_default_str();
  exp->add_option("--ticker", exp_ticker)->required();
  exp->add_option("--month", exp_month)->required();
  exp->add_option("--level", exp_level)->capture_default_str();
  exp->add_option("--sample", exp_sample)->capture_default_str();
  exp->add_flag("--all-samples", exp_all, "Concatenate samples 1..level");
  exp->add_option("--min-level", exp_min_level, "Refuse levels below this")->capture_default_str();
  exp->add_flag("--median", exp_median);

  // compare-variants
  auto* cmp = app.add_subcommand("compare-variants", "Plain versus median-balanced results side by side");
  std::string cmp_data = "data", cmp_ticker, cmp_month;
  cmp->add_option("--data", cmp_data)->capture_default_str();
  cmp->add_option("--ticker", cmp_ticker)->required();
  cmp->add_option("--month", cmp_month)->required();

  auto* list = app.add_subcommand("list-tests", "Print the test registry as JSON");

  CLI11_PARSE(app, argc, argv);
  g.tests = split(tests_csv);

  try {
    if (*ingest) {
      ColumnMap map;
      if (!columns.empty()) map = ColumnMap::from_order(columns);
      if (!exec_codes.empty()) map.exec_codes = ColumnMap::parse_codes(exec_codes);
      const Nanos open = parse_clock(open_time), close = parse_clock(close_time);
      for (const auto& f : ingest_files) {
        TradeDay day = parse_message_file(f, map);
        if (!ingest_ticker.empty()) day.ticker = ingest_ticker;
        if (!ingest_date.empty()) day.date = ingest_date;
        if (day.ticker.empty() || day.date.empty())
          throw Error("cannot tell ticker and date of " + f + "; pass --ticker and --date");
        if (!no_session) day = restrict_session(day, open, close);
        if (day.empty()) std::cerr << "warning: " << f << " has no executions in the session\n";
        const auto path = day_file_path(ingest_data, day.ticker, day.date);
        write_day_file(path, day);
        std::cout << path.string() << ' ' << day.prices.size() << '\n';
      }
    } else if (*gen) {
      if (!gen_month.empty()) {
        if (gen_data.empty()) throw Error("--month needs --data");
        SyntheticMonth s;
        s.ticker = gen_ticker;
        s.month = gen_month;
        s.days = gen_days;
        s.ticks_per_day = gen_ticks;
        s.seed = g.seed;
        s.walk.rho = gen_rho;
        s.walk.zero_prob = gen_zero;
        s.walk.tick = gen_tick;
        s.walk.s0 = gen_s0;
        if (gen_kind == "biased-walk") s.up_prob = gen_up.value_or(0.5);
        else if (gen_kind != "persistent-walk") throw Error("--month needs --kind persistent-walk or biased-walk");
        for (const auto& d : write_synthetic_month(gen_data, s)) std::cout << d << '\n';
      } else if (gen_kind == "persistent-walk" || gen_kind == "biased-walk") {
        WalkPath path;
        if (gen_kind == "biased-walk") {
          path = biased_walk(g.seed, gen_n, gen_up.value_or(0.5), gen_tick, gen_s0);
        } else {
          path = persistent_walk(WalkParams{g.seed, gen_n, gen_rho, gen_tick, gen_s0, gen_zero});
        }
        if (path.clamped) std::cerr << "warning: " << path.clamped << " steps clamped at the lower bound\n";
        with_output(g.out, [&](std::ostream& o) {
          for (auto p : path.prices) o << p << '\n';
        });
      } else {
        GeneratorSpec spec;
        spec.kind = parse_generator_kind(gen_kind);
        spec.seed = g.seed;
        const BitString bits = generator_bits(spec, gen_n);
        if (gen_format == "binary") {
          if (g.out.empty()) throw Error("binary output needs --out");
          write_bits_binary(g.out, bits);
        } else if (gen_format == "values") {
          with_output(g.out, [&](std::ostream& o) {
            for (auto v : bits_to_walk(bits)) o << v << '\n';
          });
        } else {
          with_output(g.out, [&](std::ostream& o) { o << bits.to_string() << '\n'; });
        }
      }
    } else if (*sym) {
      const auto dir = parse_ratio_direction(g.direction);
      MonthlyString ms;
      if (!sym_day.empty()) {
        const TradeDay day = read_day_file(sym_day);
        ms.ticker = day.ticker;
        ms.month = day.date;
        ms.level = sym_level;
        ms.sample = sym_sample;
        ms.day_boundaries = {0};
        ms.bits = sym_median ? median_symbolize(day.prices, sym_level, sym_sample, dir)
                             : symbolize(day.prices, sym_level, sym_sample, dir);
      } else {
        if (sym_ticker.empty() || sym_month.empty()) throw Error("symbolize needs --ticker and --month, or --day-file");
        RunConfig c = base_config(g, sym_data);
        c.max_level = sym_level;
        std::vector<std::string> warnings;
        const MonthData md = load_month(c, sym_ticker, sym_month, warnings, sym_median);
        for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
        ms = concat_month(md.grids, sym_level, sym_sample, sym_month);
      }
      if (g.out.empty()) {
        std::cout << ms.bits.to_string() << '\n';
      } else {
        write_bit_file(g.out, ms, dir);
      }
    } else if (*san) {
      SanityOptions opt;
      opt.alpha = g.alpha;
      opt.max_level = g.max_level;
      opt.threshold = san_threshold;
      opt.worst_case = san_worst;
      opt.jobs = g.jobs;
      if (!san_lengths.empty()) {
        opt.lengths.clear();
        for (const auto& l : split(san_lengths)) opt.lengths.push_back(std::stoul(l));
      }
      std::vector<GeneratorSpec> gens;
      for (const auto& s : san_generators) gens.push_back(parse_generator(s, g.seed));
      const stats::Registry reg = g.tests.empty() ? stats::default_registry() : stats::default_registry().only(g.tests);
      const SanityReport rep = run_sanity(gens, opt, reg);
      const fs::path out = g.out.empty() ? fs::path("sanity") : fs::path(g.out);
      fs::create_directories(out);
      {
        std::ofstream csv(out / "sanity.csv");
        write_sanity_csv(csv, rep);
      }
      std::ofstream js(out / "exclusions.json");
      js << exclusions_json(rep).dump(2) << '\n';
      write_sanity_csv(std::cout, rep);
    } else if (*run) {
      RunConfig c = base_config(g, run_data);
      c.tickers = split(run_tickers);
      c.months = split(run_months);
      c.min_level = run_min_level;
      c.median_variant = run_median;
      c.length_classes = parse_length_classes(run_classes);
      c.missing_fatal = run_missing_fatal;
      c.seeds = {g.seed};
      if (!run_days_file.empty()) {
        std::ifstream in(run_days_file);
        if (!in) throw Error("cannot open " + run_days_file);
        for (std::string line; std::getline(in, line);)
          if (!line.empty()) c.trading_days.push_back(line);
      }
      const ResultSet rs = run_month(c);
      for (const auto& w : rs.warnings) std::cerr << "warning: " << w << '\n';
      write_run(c, rs);
      std::cout << (c.out_dir / "results.csv").string() << ' ' << rs.rows.size() << " rows\n";
    } else if (*sum) {
      std::ifstream in(sum_results);
      if (!in) throw Error("cannot open " + sum_results);
      const auto rows = read_results_csv(in);
      with_output(g.out, [&](std::ostream& o) { write_boxplot_csv(o, summarize(rows)); });
    } else if (*exp) {
      RunConfig c = base_config(g, exp_data);
      c.tickers = {exp_ticker};
      c.months = {exp_month};
      c.median_variant = exp_median;
      if (c.max_level < exp_level) c.max_level = exp_level;
      ExportOptions opt{exp_level, exp_sample, exp_all, exp_min_level};
      const ExportResult r = export_bits(c, exp_ticker, exp_month, opt);
      const fs::path out = g.out.empty() ? fs::path(exp_ticker + "_" + exp_month + "_l" + std::to_string(exp_level) + ".bits")
                                         : fs::path(g.out);
      write_export(out, r);
      std::cout << out.string() << ' ' << r.bits.size() << " bits\n";
    } else if (*cmp) {
      RunConfig c = base_config(g, cmp_data);
      c.tickers = {cmp_ticker};
      c.months = {cmp_month};
      const auto rows = compare_variants(c, cmp_ticker, cmp_month);
      with_output(g.out, [&](std::ostream& o) { write_variants_csv(o, rows); });
    } else if (*list) {
      with_output(g.out, [&](std::ostream& o) { o << stats::default_registry().to_json().dump(2) << '\n'; });
    }
  } catch (const ExportRefused& e) {
    std::cerr << "export refused: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
