// Equilibrium separations of a floating slab as the temperature changes.
// Usage: demo_levitation_sweep [config.json]

#include <cstdio>
#include <string>

#include "casilift/cli.hpp"
#include "casilift/landscape.hpp"

using namespace casilift;

int main(int argc, char** argv) {
  const std::string path = argc > 1 ? argv[1] : CASILIFT_DEMO_DATA "/configs/ps_slab_gravity.json";
  const cli::RunConfig cfg = cli::load_config(path, "sweep");
  SweepOptions opt;
  opt.d_range = {cfg.d_grid.front(), cfg.d_grid.back()};
  opt.n_scan = static_cast<int>(cfg.d_grid.size());
  opt.workers = 1;
  const SweepResult r = sweep_temperature(*cfg.suspension, cfg.T_grid, opt, cfg.landscape);

  for (std::size_t i = 0; i < r.T.size(); ++i) {
    std::printf("T = %6.1f K:", r.T[i]);
    for (const auto& e : r.equilibria[i]) std::printf("  %8.1f nm (%s)", e.d_c * 1e9, to_string(e.stability));
    std::printf("\n");
  }
  for (const auto& b : r.bifurcations)
    std::printf("saddle-node at T_c = %.3f K, d = %.1f nm, pair vanishes on %s\n", b.T_c, b.d_merge * 1e9,
                b.annihilates_upward ? "heating" : "cooling");
}
