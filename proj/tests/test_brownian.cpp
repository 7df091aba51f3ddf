#include <gtest/gtest.h>

#include <cmath>

#include "casilift/brownian.hpp"
#include "casilift/constants.hpp"
#include "casilift/material_io.hpp"

using namespace casilift;

namespace {

constexpr double T0 = 300.0;
const double kT0 = constants::k_B * T0;

// U(z) in units of kT0 with z = 1 um * (2 + x): wells at x = -1, +1 of equal
// depth, a barrier of height W at x = 0, and a tilt.
auto double_well(double W, double tilt = 0.0) {
  return [=](double z) {
    const double x = z / 1e-6 - 2.0;
    const double u = W * (x * x - 1.0) * (x * x - 1.0) + tilt * x;
    const double du_dx = W * 4.0 * x * (x * x - 1.0) + tilt;
    return std::pair<double, double>{u * kT0, -du_dx * kT0 / 1e-6};
  };
}

auto harmonic(double z0, double k_kT_per_m2) {
  return [=](double z) {
    return std::pair<double, double>{0.5 * k_kT_per_m2 * (z - z0) * (z - z0) * kT0, -k_kT_per_m2 * (z - z0) * kT0};
  };
}

// A skewed basin: hard wall towards small z, linear ramp outwards.
auto skewed(double a, double b) {
  return [=](double z) {
    const double x = z / 1e-6;
    return std::pair<double, double>{(a / x + b * x) * kT0, (a / (x * x) - b) * kT0 / 1e-6};
  };
}

// Composite Simpson on [lo, hi] with n (even) intervals.
template <class F>
double simpson(F&& f, double lo, double hi, int n) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

const MaterialLibrary& lib() {
  static const MaterialLibrary l = load_material_library(CASILIFT_DATA_DIR "/materials.json");
  return l;
}

}  // namespace

TEST(Stiction, Examples) {
  EXPECT_EQ(stiction_exponent(0.0).value, 1.0);
  EXPECT_NEAR(stiction_exponent(50.0).value, 1.9287e-22, 1e-26);
  EXPECT_FALSE(stiction_exponent(50.0).underflow);
  const StictionFactor big = stiction_exponent(1e4);
  EXPECT_EQ(big.value, 0.0);
  EXPECT_TRUE(big.underflow);
  EXPECT_THROW(stiction_exponent(-1.0), DomainError);
}

TEST(Boltzmann, HarmonicMeanIsMinimum) {
  const double z0 = 1.3e-6;
  const double L = 4e-7;
  const BoltzmannStats s =
      boltzmann_stats(harmonic(z0, 1e15), T0, T0, BoltzmannDomain{z0 - L, z0 + L, BasinPolicy::full_range});
  EXPECT_NEAR(s.mean_d, z0, 1e-12 * z0);
  EXPECT_NEAR(s.q025 + s.q975, 2.0 * z0, 1e-9 * z0);
  // Gaussian with sigma^2 = 1/k: equal-tail 95% half-width 1.959964 sigma.
  EXPECT_NEAR(s.q975 - z0, 1.959964 / std::sqrt(1e15), 1e-6 / std::sqrt(1e15));
}

TEST(Boltzmann, FlatFullRange) {
  auto flat = [](double) { return std::pair<double, double>{0.0, 0.0}; };
  const double a = 2e-7, b = 9e-7;
  const BoltzmannStats s = boltzmann_stats(flat, T0, T0, BoltzmannDomain{a, b, BasinPolicy::full_range});
  EXPECT_NEAR(s.mean_d, 0.5 * (a + b), 1e-15);
  EXPECT_NEAR(s.q025, a + 0.025 * (b - a), 1e-15);
  EXPECT_NEAR(s.q975, a + 0.975 * (b - a), 1e-15);
  EXPECT_NEAR(s.normalization, 1.0, 1e-14);
}

TEST(Boltzmann, FlatHasNoSuspensionBasin) {
  auto flat = [](double) { return std::pair<double, double>{0.0, 0.0}; };
  EXPECT_THROW(boltzmann_stats(flat, T0, T0, BoltzmannDomain{}), DomainError);
}

TEST(Boltzmann, RejectsBadArguments) {
  EXPECT_THROW(boltzmann_stats(harmonic(1e-6, 1e15), T0, 0.0, BoltzmannDomain{}), DomainError);
  EXPECT_THROW(boltzmann_stats(harmonic(1e-6, 1e15), T0, T0, BoltzmannDomain{1e-6, 1e-7}), DomainError);
}

TEST(Boltzmann, NormalizationAgainstIndependentQuadrature) {
  const auto uf = skewed(0.8, 2.0);
  const BoltzmannDomain dom{1e-7, 5e-6, BasinPolicy::full_range};
  BoltzmannOptions opt;
  opt.interp_tol_kT = 1e-11;  // interpolation error otherwise dominates at 1e-8
  const BoltzmannStats s = boltzmann_stats(uf, T0, T0, dom, opt);
  const double Z = s.normalization * (dom.d_hi - dom.d_lo);
  auto p = [&](double z) { return std::exp(-(uf(z).first - s.U_min) / kT0) / Z; };
  EXPECT_NEAR(simpson(p, dom.d_lo, dom.d_hi, 400000), 1.0, 1e-9);
  // Minimum at x = sqrt(a/b), so the sampled U_min can only lie above it.
  EXPECT_GE(s.U_min, uf(std::sqrt(0.4) * 1e-6).first);
  auto zp = [&](double z) { return z * p(z); };
  EXPECT_NEAR(simpson(zp, dom.d_lo, dom.d_hi, 400000), s.mean_d, 1e-9 * s.mean_d);
  // Adaptive Gauss-Kronrod reference, rel. tol 1e-13.
  EXPECT_NEAR(s.mean_d, 1.033633466324394e-06, 1e-9 * s.mean_d);
}

TEST(Boltzmann, QuantilesEncloseNinetyFivePercent) {
  const auto uf = skewed(0.8, 2.0);
  const BoltzmannDomain dom{1e-7, 5e-6, BasinPolicy::full_range};
  const BoltzmannStats s = boltzmann_stats(uf, T0, T0, dom);
  auto w = [&](double z) { return std::exp(-uf(z).first / kT0); };
  const double Z = simpson(w, dom.d_lo, dom.d_hi, 400000);
  const double P_lo = simpson(w, dom.d_lo, s.q025, 200000) / Z;
  const double P_hi = simpson(w, dom.d_lo, s.q975, 200000) / Z;
  EXPECT_NEAR(P_hi - P_lo, 0.95, 1e-6);
  EXPECT_NEAR(P_lo, 0.025, 1e-6);
  EXPECT_LT(s.q025, s.q975);
}

TEST(Boltzmann, SuspensionBasinExcludesInnerWell) {
  const BoltzmannStats s = boltzmann_stats(double_well(50.0), T0, T0, BoltzmannDomain{});
  EXPECT_NEAR(s.d_stable, 3e-6, 1e-15);
  EXPECT_GE(s.d_lo, 2e-6);  // never below the barrier top
  EXPECT_NEAR(s.barrier_in, 50.0, 1e-9);
  // Nearly harmonic well of curvature 8 W at x = 1.
  EXPECT_NEAR(s.mean_d, 3e-6, 0.02e-6);
}

TEST(Boltzmann, CutoffInsensitivity) {
  BoltzmannOptions a, b;
  a.cutoff_kT = 30.0;
  b.cutoff_kT = 45.0;
  const auto uf = double_well(80.0, 3.0);
  const BoltzmannStats sa = boltzmann_stats(uf, T0, T0, BoltzmannDomain{}, a);
  const BoltzmannStats sb = boltzmann_stats(uf, T0, T0, BoltzmannDomain{}, b);
  EXPECT_LT(sb.d_hi, 5e-6 + 1e-18);
  EXPECT_GT(sb.d_hi - sb.d_lo, sa.d_hi - sa.d_lo);
  EXPECT_LT(std::abs(sa.mean_d - sb.mean_d), 0.01e-9);
}

TEST(Barrier, SyntheticDoubleWellDepths) {
  const Barrier b = barrier(double_well(37.5), T0);
  EXPECT_NEAR(b.toward_contact, 37.5, 1e-9);
  EXPECT_TRUE(std::isinf(b.toward_escape));
  // Measured in units of k_B T at twice the temperature.
  EXPECT_NEAR(barrier(double_well(37.5), 2.0 * T0).toward_contact, 18.75, 1e-9);
}

TEST(Barrier, NoInnerUnstablePointIsInfinite) {
  const Barrier b = barrier(harmonic(1e-6, 1e15), T0);
  EXPECT_TRUE(std::isinf(b.toward_contact));
}

TEST(Counterfactual, HarmonicMeanIsTemperatureIndependent) {
  const double z0 = 1.5e-6;
  const BoltzmannLandscape bl(harmonic(z0, 1e15), T0, BoltzmannDomain{z0 - 5e-7, z0 + 5e-7, BasinPolicy::full_range},
                              100.0, 400.0);
  for (double T : {100.0, 200.0, 400.0}) EXPECT_NEAR(bl.at(T).mean_d, z0, 1e-12 * z0);
}

TEST(Counterfactual, CoincidesWithTrueCurveAtFrozenTemperature) {
  SuspensionCase c;
  c.kind = SuspensionCase::Kind::sphere;
  c.substrate = Stack{{}, lib().at("si_doped_1.1e15")};
  c.fluid = lib().at("ethanol");
  c.sphere = SphereSpec{lib().at("polystyrene"), 98.2e-6, 100e-6};
  GravitySpec g;
  g.mode = GravitySpec::Mode::hollow_sphere;
  g.rho_shell = 789.05;
  g.rho_fluid = 789.0;
  g.r_inner = 98.2e-6;
  g.R_outer = 100e-6;
  c.gravity = g;
  const auto cf = counterfactual_mean(c, 300.0, {280.0, 300.0, 320.0}, BoltzmannDomain{});
  const BoltzmannStats truth = boltzmann_stats(c, 300.0, 300.0, BoltzmannDomain{});
  ASSERT_EQ(cf.size(), 3u);
  EXPECT_NEAR(cf[1].second, truth.mean_d, 0.01e-9);
  EXPECT_GT(truth.barrier_in, 10.0);
}

TEST(Barrier, PlateOfFiftyMicronsMakesStictionNegligible) {
  SuspensionCase c;
  c.substrate = Stack{{}, lib().at("si_doped_1.1e15")};
  c.body = Stack{{Layer{lib().at("polystyrene"), 1.5e-7}}, lib().at("ethanol")};
  c.fluid = lib().at("ethanol");
  GravitySpec g;
  g.delta_rho = 264.0;
  g.thickness = 1.5e-7;
  c.gravity = g;
  c.area = 50e-6 * 50e-6;
  const Barrier b = barrier(c, 300.0, DRange{}, 100);
  // Order 10^2 to 10^5 k_B T with the shipped data; scales with the area.
  EXPECT_GT(b.toward_contact, 1e2);
  EXPECT_LT(b.toward_contact, 1e5);
  c.area *= 4.0;
  EXPECT_NEAR(barrier(c, 300.0, DRange{}, 100).toward_contact, 4.0 * b.toward_contact, 1e-6 * b.toward_contact);
}
