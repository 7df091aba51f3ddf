// Mean separation of a hollow sphere above the substrate and its 95% band,
// read as a thermometer.
// Usage: demo_sphere_thermometer [config.json]

#include <cstdio>
#include <string>

#include "casilift/brownian.hpp"
#include "casilift/cli.hpp"

using namespace casilift;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : CASILIFT_DEMO_DATA "/configs/sphere_analog.json";
  const cli::RunConfig cfg = cli::load_config(path, "boltzmann");
  const BoltzmannDomain domain{cfg.d_grid.front(), cfg.d_grid.back(), cfg.boltzmann.policy};
  std::printf("%8s %12s %12s %12s %14s\n", "T [K]", "<d> [nm]", "q2.5 [nm]", "q97.5 [nm]", "barrier [kT]");
  for (double T : cfg.T_grid) {
    const BoltzmannStats s = boltzmann_stats(*cfg.suspension, T, T, domain, cfg.boltzmann_options, cfg.landscape);
    std::printf("%8.1f %12.2f %12.2f %12.2f %14.2f\n", T, s.mean_d * 1e9, s.q025 * 1e9, s.q975 * 1e9, s.barrier_in);
  }
}
