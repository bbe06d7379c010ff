// Writes a synthetic blowfly series simulated at the reference parameters,
// one population value per line.

#include <cstdio>
#include <fstream>

#include "CLI11.hpp"
#include "habc/blowfly.hpp"

int main(int argc, char** argv) {
  CLI::App app{"simulate an observed blowfly series"};
  std::uint64_t seed = 20240501;
  std::string out = "data/blowfly_observed.csv";
  habc::BlowflyConfig cfg;
  app.add_option("--seed", seed, "simulator seed");
  app.add_option("--out", out, "output file");
  app.add_option("--horizon", cfg.horizon, "days simulated, burn-in included");
  app.add_option("--burnin", cfg.burnin, "days discarded");
  CLI11_PARSE(app, argc, argv);

  const auto series = habc::blowfly_series(habc::blowfly_reference_params(), seed, cfg);
  std::ofstream f(out, std::ios::binary);
  if (!f) {
    std::fprintf(stderr, "cannot write %s\n", out.c_str());
    return 1;
  }
  char buf[64];
  for (double v : series) {
    std::snprintf(buf, sizeof(buf), "%.17g\n", v);
    f << buf;
  }
  std::printf("wrote %zu values to %s\n", series.size(), out.c_str());
  return 0;
}
