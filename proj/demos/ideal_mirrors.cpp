// Pressure between two ideal mirrors in vacuum: the T = 0 result against the
// closed form and the thermal crossover at a few microns. The static TE term
// is dropped for every material, so at large d the ratio tends to half the
// classical two-polarization value.

#include <cmath>
#include <cstdio>

#include "casilift/lifshitz.hpp"

using namespace casilift;

int main() {
  const Material mirror{"mirror", PerfectConductorModel{}};
  const Material vacuum{"vacuum", ConstantModel{1.0}};
  std::printf("%10s %14s %14s %14s %14s\n", "d [nm]", "P(T=0) [Pa]", "closed form", "P(300 K) [Pa]", "ratio");
  for (double d : {50e-9, 100e-9, 300e-9, 1e-6, 3e-6, 10e-6}) {
    const GapGeometry g{Stack{{}, mirror}, Stack{{}, mirror}, vacuum, d};
    const double exact = constants::pi * constants::pi * constants::hbar * constants::c / (240.0 * std::pow(d, 4));
    const double p0 = pressure_T0(g);
    const double p300 = pressure(g, ThermalSpec{300.0}).value;
    std::printf("%10.0f %14.6e %14.6e %14.6e %14.4f\n", d * 1e9, p0, exact, p300, p300 / p0);
  }
}
