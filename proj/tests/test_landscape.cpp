#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "casilift/constants.hpp"
#include "casilift/landscape.hpp"
#include "casilift/material_io.hpp"

using namespace casilift;

namespace {

const MaterialLibrary& lib() {
  static const MaterialLibrary l = load_material_library(CASILIFT_DATA_DIR "/materials.json");
  return l;
}

SuspensionCase plate(const std::string& body, const std::string& fluid, const std::string& substrate,
                     double h = 0.0, double delta_rho = 0.0) {
  SuspensionCase c;
  c.substrate = Stack{{}, lib().at(substrate)};
  c.body = h > 0.0 ? Stack{{Layer{lib().at(body), h}}, lib().at(fluid)} : Stack{{}, lib().at(body)};
  c.fluid = lib().at(fluid);
  if (delta_rho != 0.0) {
    GravitySpec g;
    g.delta_rho = delta_rho;
    g.thickness = h;
    c.gravity = g;
  }
  return c;
}

SuspensionCase sphere(const std::string& shell, const std::string& fluid, const std::string& substrate, double r,
                      double R, double rho_shell, double rho_fluid) {
  SuspensionCase c;
  c.kind = SuspensionCase::Kind::sphere;
  c.substrate = Stack{{}, lib().at(substrate)};
  c.fluid = lib().at(fluid);
  c.sphere = SphereSpec{lib().at(shell), r, R};
  GravitySpec g;
  g.mode = GravitySpec::Mode::hollow_sphere;
  g.rho_shell = rho_shell;
  g.rho_fluid = rho_fluid;
  g.r_inner = r;
  g.R_outer = R;
  c.gravity = g;
  return c;
}

LandscapeOptions tight() {
  LandscapeOptions o;
  o.integrand.rel_tol = 1e-12;
  o.truncation = 1e-13;
  return o;
}

// F(d, T) = -ln(d/d0)^2 + alpha (T_c - T): a pair at d0 exp(+-sqrt(alpha (T_c - T)))
// that merges at T_c.
auto fold_family(double d0, double T_c, double alpha, double sign = 1.0) {
  return [=](double T) {
    return [=](double d) {
      const double l = std::log(d / d0);
      return -l * l + sign * alpha * (T_c - T);
    };
  };
}

}  // namespace

TEST(Gravity, HollowSphereWeight) {
  GravitySpec g;
  g.mode = GravitySpec::Mode::hollow_sphere;
  g.rho_shell = 1053.0;
  g.rho_fluid = 789.0;
  g.r_inner = 3.2e-6;
  g.R_outer = 5e-6;
  const double vol = 4.0 * constants::pi / 3.0 * (std::pow(5e-6, 3) - std::pow(3.2e-6, 3));
  EXPECT_NEAR(weight(g), constants::g_standard * 264.0 * vol, 1e-24);
  EXPECT_NEAR(weight(g), 1.02e-12, 0.03e-12);
}

TEST(Gravity, InvalidSpecsRejected) {
  GravitySpec g;
  g.thickness = -1.0;
  EXPECT_THROW(validate(g), DomainError);
  g = GravitySpec{};
  g.mode = GravitySpec::Mode::hollow_sphere;
  g.r_inner = 5e-6;
  g.R_outer = 3e-6;
  EXPECT_THROW(validate(g), DomainError);
}

TEST(TotalEnergy, NoContrastNoGravityIsZero) {
  const SuspensionCase c = plate("ethanol", "ethanol", "silicon");
  for (double d : {2e-8, 3e-7, 2e-6}) {
    EXPECT_EQ(total_energy(c, d, 300.0), 0.0);
    EXPECT_EQ(total_force(c, d, 300.0), 0.0);
  }
}

TEST(TotalEnergy, GravityAloneIsLinear) {
  SuspensionCase c = plate("ethanol", "ethanol", "ethanol", 1e-6, 264.0);
  const double w = 264.0 * constants::g_standard * 1e-6;
  for (double d : {1e-7, 1e-6}) EXPECT_NEAR(total_energy(c, 2 * d, 300.0) - total_energy(c, d, 300.0), w * d, 1e-12 * w * d);
  SuspensionCase s = sphere("ethanol", "ethanol", "ethanol", 3.2e-6, 5e-6, 1053.0, 789.0);
  const double W = weight(*s.gravity);
  EXPECT_NEAR(total_energy(s, 4e-7, 300.0) - total_energy(s, 2e-7, 300.0), W * 2e-7, 1e-12 * W * 2e-7);
  EXPECT_DOUBLE_EQ(total_force(s, 3e-7, 300.0), -W);
}

TEST(TotalEnergy, NonPositiveSeparationRejected) {
  EXPECT_THROW(total_energy(plate("polystyrene", "ethanol", "silicon"), 0.0, 300.0), DomainError);
  EXPECT_THROW(total_force(plate("polystyrene", "ethanol", "silicon"), -1e-7, 300.0), DomainError);
}

TEST(TotalForce, MatchesEnergySlopeOnRandomCases) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::vector<std::string> solids{"polystyrene", "teflon", "silicon", "si_doped_1e18", "gold", "lithium_niobate"};
  const std::vector<std::string> fluids{"ethanol", "water"};
  for (int t = 0; t < 8; ++t) {
    const std::string a = solids[rng() % solids.size()], b = solids[rng() % solids.size()];
    const std::string f = fluids[rng() % fluids.size()];
    SuspensionCase c = t % 2 ? sphere(a, f, b, 3e-6 + 1e-6 * u(rng), 5e-6 + 5e-6 * u(rng), 1000.0 + 200 * u(rng), 789.0)
                             : plate(a, f, b, 5e-8 + 3e-7 * u(rng), 100.0 + 300.0 * u(rng));
    const double d = std::pow(10.0, -7.6 + 1.5 * u(rng));
    const double T = 50.0 + 300.0 * u(rng);
    Landscape ls(c, T, tight());
    const double h = 1e-4 * d;
    const double slope = -(ls.energy(d + h) - ls.energy(d - h)) / (2 * h);
    const double f0 = ls.force(d);
    EXPECT_NEAR(slope, f0, 1e-6 * std::abs(f0)) << a << "/" << f << "/" << b << " d=" << d << " T=" << T;
  }
}

TEST(TotalForce, RepulsiveInsideAttractiveOutside) {
  const SuspensionCase c = plate("teflon", "ethanol", "silicon");
  EXPECT_GT(total_force(c, 5e-8, 300.0), 0.0);
  EXPECT_LT(total_force(c, 2e-6, 300.0), 0.0);
  const auto eq = find_equilibria(c, 300.0, DRange{}, 100);
  ASSERT_EQ(eq.size(), 1u);
  EXPECT_EQ(eq[0].stability, Stability::stable);
  EXPECT_GT(eq[0].d_c, 1e-7);
  EXPECT_LT(eq[0].d_c, 1e-6);
  EXPECT_NEAR(total_force(c, eq[0].d_c, 300.0), 0.0, 1e-6 * std::abs(total_force(c, 5e-8, 300.0)));
}

TEST(FindEquilibria, PureAttractionIsEmpty) {
  auto f = [](double d) { return -1.0 / (d * d); };
  EXPECT_TRUE(find_equilibria(f, 300.0, DRange{}).empty());
}

TEST(FindEquilibria, SyntheticRootsAndStability) {
  const double a = 1.234e-7, b = 2.71828e-6;
  auto f = [&](double d) { return -(d - a) * (d - b) * (1.0 + d * 1e5); };
  const auto eq = find_equilibria(f, 300.0, DRange{}, 200);
  ASSERT_EQ(eq.size(), 2u);
  EXPECT_NEAR(eq[0].d_c, a, 1e-10 * a);
  EXPECT_NEAR(eq[1].d_c, b, 1e-10 * b);
  // F > 0 between a and b: a is unstable (F rises through it), b is stable.
  EXPECT_EQ(eq[0].stability, Stability::unstable);
  EXPECT_EQ(eq[1].stability, Stability::stable);
  EXPECT_EQ(eq[0].T, 300.0);
}

TEST(FindEquilibria, AlternationOnManyRoots) {
  auto f = [](double d) { return std::sin(12.0 * std::log(d / 1e-8)); };
  const auto eq = find_equilibria(f, 1.0, DRange{}, 400);
  ASSERT_GE(eq.size(), 10u);
  for (std::size_t i = 1; i < eq.size(); ++i) {
    EXPECT_NE(eq[i].stability, eq[i - 1].stability);
    EXPECT_LT(eq[i - 1].d_c, eq[i].d_c);
  }
}

TEST(FindEquilibria, NearTangentPairBetweenGridPoints) {
  // Roots 0.2% apart, far closer than the 3% scan spacing.
  const double d0 = 4.567e-7, w = 1e-3;
  auto f = [&](double d) {
    const double l = std::log(d / d0);
    return w * w - l * l;
  };
  const auto eq = find_equilibria(f, 1.0, DRange{}, 200);
  ASSERT_EQ(eq.size(), 2u);
  EXPECT_NEAR(eq[0].d_c, d0 * std::exp(-w), 1e-9 * d0);
  EXPECT_NEAR(eq[1].d_c, d0 * std::exp(w), 1e-9 * d0);
}

TEST(FindEquilibria, InvalidArgumentsRejected) {
  auto f = [](double d) { return d; };
  EXPECT_THROW(find_equilibria(f, 1.0, DRange{}, 8), DomainError);
  EXPECT_THROW(find_equilibria(f, 1.0, DRange{1e-6, 1e-7}), DomainError);
}

TEST(Sweep, TemperatureIndependentGivesHorizontalBranches) {
  auto at_T = [](double) {
    return [](double d) { return std::sin(3.0 * std::log(d / 1e-7)); };
  };
  SweepOptions opt;
  const auto res = sweep_temperature(at_T, temperature_grid(100.0, 200.0, 10.0), opt);
  EXPECT_TRUE(res.bifurcations.empty());
  ASSERT_FALSE(res.branches.empty());
  for (const auto& b : res.branches) {
    EXPECT_EQ(b.samples.size(), 11u);
    for (const auto& s : b.samples) EXPECT_EQ(s.d_c, b.samples.front().d_c);
    EXPECT_EQ(branch_slope(b, 150.0).slope, 0.0);
  }
}

TEST(Sweep, FoldAnnihilatesAtCriticalTemperature) {
  SweepOptions opt;
  opt.T_tol = 1e-6;
  const auto res = sweep_temperature(fold_family(3e-7, 187.3, 0.01), temperature_grid(150.0, 250.0, 5.0), opt);
  ASSERT_EQ(res.bifurcations.size(), 1u);
  const Bifurcation& b = res.bifurcations[0];
  EXPECT_NEAR(b.T_c, 187.3, 1e-5);
  EXPECT_NEAR(b.d_merge, 3e-7, 3e-7 * 1e-3);
  EXPECT_TRUE(b.annihilates_upward);
  EXPECT_EQ(res.branches[b.branch_a].stability, Stability::stable);
  EXPECT_EQ(res.branches[b.branch_b].stability, Stability::unstable);
  EXPECT_LT(b.force_residual, 1e-3);
  EXPECT_LT(b.slope_residual, 2e-2);
  EXPECT_LE(res.branches[b.branch_a].samples.back().T, 187.3);
}

TEST(Sweep, PairBornOnWarming) {
  SweepOptions opt;
  const auto res = sweep_temperature(fold_family(1e-6, 222.2, 0.02, -1.0), temperature_grid(200.0, 260.0, 4.0), opt);
  ASSERT_EQ(res.bifurcations.size(), 1u);
  EXPECT_FALSE(res.bifurcations[0].annihilates_upward);
  EXPECT_NEAR(res.bifurcations[0].T_c, 222.2, 2e-3);
}

TEST(Sweep, CriticalTemperatureStableUnderStepHalving) {
  SweepOptions opt;
  const auto coarse = sweep_temperature(fold_family(5e-7, 171.05, 0.005), temperature_grid(100.0, 250.0, 10.0), opt);
  const auto fine = sweep_temperature(fold_family(5e-7, 171.05, 0.005), temperature_grid(100.0, 250.0, 5.0), opt);
  ASSERT_EQ(coarse.bifurcations.size(), 1u);
  ASSERT_EQ(fine.bifurcations.size(), 1u);
  EXPECT_NEAR(coarse.bifurcations[0].T_c, fine.bifurcations[0].T_c, 0.1);
}

TEST(Sweep, ContinuationConsistentUnderStepHalving) {
  auto family = [](double T) {
    return [T](double d) { return std::log(1e-6 * (1.0 + 0.002 * (T - 100.0)) / d); };
  };
  SweepOptions opt;
  const auto coarse = sweep_temperature(family, temperature_grid(100.0, 200.0, 10.0), opt);
  const auto fine = sweep_temperature(family, temperature_grid(100.0, 200.0, 5.0), opt);
  ASSERT_EQ(coarse.branches.size(), 1u);
  ASSERT_EQ(fine.branches.size(), 1u);
  for (const auto& s : coarse.branches[0].samples) {
    const double slope = branch_slope(fine.branches[0], s.T).slope;
    for (const auto& f : fine.branches[0].samples)
      if (f.T == s.T) {
        EXPECT_LE(std::abs(f.d_c - s.d_c), 2.0 * std::abs(slope) * 10.0 + 1e-15);
      }
  }
}

TEST(Sweep, WorkerCountDoesNotChangeResults) {
  auto family = fold_family(3e-7, 187.3, 0.01);
  SweepOptions one, four;
  four.workers = 4;
  const auto a = sweep_temperature(family, temperature_grid(150.0, 250.0, 2.0), one);
  const auto b = sweep_temperature(family, temperature_grid(150.0, 250.0, 2.0), four);
  ASSERT_EQ(a.branches.size(), b.branches.size());
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    ASSERT_EQ(a.branches[i].samples.size(), b.branches[i].samples.size());
    for (std::size_t k = 0; k < a.branches[i].samples.size(); ++k)
      EXPECT_EQ(a.branches[i].samples[k].d_c, b.branches[i].samples[k].d_c);
  }
  ASSERT_EQ(a.bifurcations.size(), b.bifurcations.size());
  EXPECT_EQ(a.bifurcations[0].T_c, b.bifurcations[0].T_c);
}

TEST(Sweep, GridValidation) {
  auto family = fold_family(3e-7, 187.3, 0.01);
  EXPECT_THROW(sweep_temperature(family, {}, SweepOptions{}), DomainError);
  EXPECT_THROW(sweep_temperature(family, {200.0, 100.0}, SweepOptions{}), DomainError);
  EXPECT_THROW(temperature_grid(10.0, 20.0, 0.0), DomainError);
  EXPECT_EQ(temperature_grid(50.0, 350.0, 0.5).size(), 601u);
}

TEST(Sweep, PhysicalFailuresCarryTemperatureAndSeparation) {
  LandscapeOptions o;
  o.n_max_cap = 3;
  const SuspensionCase c = plate("teflon", "ethanol", "silicon");
  try {
    sweep_temperature(c, {300.0}, SweepOptions{}, o);
    FAIL() << "expected NumericalFailure";
  } catch (const NumericalFailure& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("T = 300"), std::string::npos) << msg;
    EXPECT_NE(msg.find("d = "), std::string::npos) << msg;
  }
}

TEST(BranchSlope, LinearBranchExactAndEdgesFlagged) {
  Branch b;
  for (int i = 0; i <= 10; ++i) b.samples.push_back({100.0 + 10.0 * i, 2e-7 + 3e-9 * (100.0 + 10.0 * i)});
  const SlopeResult mid = branch_slope(b, 150.0);
  EXPECT_NEAR(mid.slope, 3e-9, 1e-20);
  EXPECT_FALSE(mid.one_sided);
  EXPECT_TRUE(branch_slope(b, 100.0).one_sided);
  EXPECT_TRUE(branch_slope(b, 200.0).one_sided);
  EXPECT_NEAR(branch_slope(b, 155.0).slope, 3e-9, 1e-20);
  EXPECT_THROW(branch_slope(b, 250.0), DomainError);
}

TEST(Pfa, NoContrastSphereIsZero) {
  SuspensionCase s = sphere("ethanol", "ethanol", "silicon", 3.2e-6, 5e-6, 1053.0, 789.0);
  EXPECT_EQ(pfa_energy(s, 2e-7, 300.0), 0.0);
}

TEST(Pfa, LinearInOuterRadius) {
  const SuspensionCase a = sphere("polystyrene", "ethanol", "si_doped_1.1e15", 3.2e-6, 5e-6, 1053.0, 789.0);
  const SuspensionCase b = sphere("polystyrene", "ethanol", "si_doped_1.1e15", 8.2e-6, 10e-6, 1053.0, 789.0);
  EXPECT_NEAR(pfa_energy(b, 3e-7, 300.0) / pfa_energy(a, 3e-7, 300.0), 2.0, 1e-12);
}

TEST(Pfa, WarnsBeyondFifthOfRadius) {
  const SuspensionCase a = sphere("polystyrene", "ethanol", "si_doped_1.1e15", 3.2e-6, 5e-6, 1053.0, 789.0);
  bool warn = false;
  pfa_energy(a, 5e-7, 300.0, {}, &warn);
  EXPECT_FALSE(warn);
  pfa_energy(a, 1.2e-6, 300.0, {}, &warn);
  EXPECT_TRUE(warn);
  EXPECT_THROW(pfa_energy(plate("teflon", "ethanol", "silicon"), 1e-7, 300.0), DomainError);
}

TEST(Pfa, SphereEnergyIsRadiusTimesEnergyIntegral) {
  const SuspensionCase s = sphere("polystyrene", "ethanol", "si_doped_1.1e15", 3.2e-6, 5e-6, 1053.0, 789.0);
  const GapGeometry g = equivalent_gap(s, 4e-7);
  ASSERT_EQ(g.right.layers.size(), 1u);
  EXPECT_DOUBLE_EQ(g.right.layers[0].thickness, 1.8e-6);
  ThermalSpec th;
  const LifshitzResult r = lifshitz(g, th);
  Landscape ls(s, 300.0);
  const LandscapePoint p = ls.at(4e-7);
  EXPECT_NEAR(p.casimir_energy, 2.0 * constants::pi * 5e-6 * r.energy_integral.value, 1e-12 * std::abs(p.casimir_energy));
  EXPECT_NEAR(p.casimir_force, 2.0 * constants::pi * 5e-6 * r.energy.value, 1e-12 * std::abs(p.casimir_force));
}

TEST(Pfa, SphereCaseValidation) {
  SuspensionCase s = sphere("polystyrene", "ethanol", "silicon", 3.2e-6, 5e-6, 1053.0, 789.0);
  s.gravity->R_outer = 6e-6;
  EXPECT_THROW(validate(s), DomainError);
  s = sphere("polystyrene", "ethanol", "silicon", 3.2e-6, 5e-6, 1053.0, 789.0);
  s.gravity->mode = GravitySpec::Mode::slab;
  EXPECT_THROW(validate(s), DomainError);
  SuspensionCase p = plate("teflon", "gold", "silicon");
  EXPECT_THROW(validate(p), DomainError);
}

TEST(GravityMonotonicity, TopStableSeparationFallsWithThickness) {
  double prev = std::numeric_limits<double>::infinity();
  for (double h : {1e-7, 1.5e-7, 2.5e-7, 4e-7}) {
    const auto eq = find_equilibria(plate("polystyrene", "ethanol", "si_doped_1.1e15", h, 264.0), 300.0, DRange{}, 100);
    double top = 0.0;
    for (const auto& e : eq)
      if (e.stability == Stability::stable) top = e.d_c;
    ASSERT_GT(top, 0.0) << h;
    EXPECT_LE(top, prev);
    prev = top;
  }
}
