// Symbolize a random walk at a few aggregation levels and run the battery on each string.
#include <cstdio>

#include "tickrand/tickrand.hpp"

int main() {
  using namespace tickrand;
  const auto path = persistent_walk(WalkParams{.seed = 7, .n = 200001, .rho = 0.5});
  const AggregationGrid grid = build_grid(path.prices, 10);
  std::printf("%zu cells\n", grid.size());
  for (std::size_t level : {1, 5, 10}) {
    const BitString& bits = grid.cell(level, 1);
    std::size_t rejected = 0, skipped = 0;
    const auto results = stats::run_battery(bits, stats::default_registry());
    for (const auto& r : results) {
      rejected += r.decision == stats::Decision::Reject;
      skipped += r.skipped();
    }
    std::printf("level %2zu: %6zu bits, %zu of %zu tests rejected, %zu skipped\n", level, bits.size(), rejected,
                results.size(), skipped);
  }
}
