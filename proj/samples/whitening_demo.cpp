// A persistent walk is far from random tick by tick; coarser aggregation levels look random.
// Prints the median -log10 p of the Runs test at each level of a synthetic month.
#include <cstdio>
#include <filesystem>

#include "tickrand/tickrand.hpp"

int main() {
  using namespace tickrand;
  const auto dir = std::filesystem::temp_directory_path() / "tickrand_whitening_demo";
  std::filesystem::remove_all(dir);
  SyntheticMonth s;
  s.days = 5;
  s.ticks_per_day = 20000;
  s.walk.rho = 0.7;
  write_synthetic_month(dir, s);

  RunConfig cfg;
  cfg.data_dir = dir;
  cfg.tickers = {s.ticker};
  cfg.months = {s.month};
  cfg.max_level = 20;
  cfg.tests = {"Runs"};
  for (const auto& b : summarize(run_month(cfg)))
    std::printf("level %2zu  median -log10 p = %7.2f\n", b.level, b.median);
  std::filesystem::remove_all(dir);
}
