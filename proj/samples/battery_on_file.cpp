// Runs the whole battery on a bit file (ASCII 0/1 or raw bytes) and prints one line per test.
#include <cstdio>

#include "tickrand/tickrand.hpp"

int main(int argc, char** argv) {
  using namespace tickrand;
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s BITFILE [alpha]\n", argv[0]);
    return 2;
  }
  const double alpha = argc > 2 ? std::stod(argv[2]) : stats::kDefaultAlpha;
  try {
    const BitString bits = file_bits(argv[1]);
    std::printf("%zu bits\n", bits.size());
    for (const auto& r : stats::run_battery(bits, stats::default_registry(), alpha)) {
      if (r.skipped()) std::printf("%-32s skip   (%s)\n", r.spec_id.c_str(), r.skip_reason.c_str());
      else std::printf("%-32s %-6s p = %.6g\n", r.spec_id.c_str(), stats::to_string(r.decision).c_str(), r.p_value());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  }
}
