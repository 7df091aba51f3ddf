#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "casilift/errors.hpp"
#include "casilift/quadrature.hpp"

using namespace casilift;
using namespace casilift::quadrature;

TEST(Quadrature, PolynomialExactOnSinglePanel) {
  // Both the 10-point Gauss and the 21-point Kronrod rule are exact here.
  auto f = [](double x) { return std::pow(x, 18) - 3.0 * x * x + 1.0; };
  const Result r = integrate(f, uniform_panels(0.0, 1.0, 1), {1e-12, 0.0, 10});
  EXPECT_NEAR(r.value, 1.0 / 19.0, 1e-15);
  EXPECT_EQ(r.panels, 1);
}

TEST(Quadrature, ExponentialDecay) {
  auto f = [](double x) { return std::exp(-x); };
  const Result r = integrate(f, uniform_panels(0.0, 50.0, 4), {1e-12, 0.0, 1000});
  EXPECT_NEAR(r.value, -std::expm1(-50.0), 1e-12);
  EXPECT_LE(r.error, 1e-11);
}

TEST(Quadrature, EndpointSingularityRefines) {
  auto f = [](double x) { return std::sqrt(x) * std::log(x); };
  const Result r = integrate(f, uniform_panels(0.0, 1.0, 1), {1e-10, 0.0, 4000});
  EXPECT_NEAR(r.value, -4.0 / 9.0, 1e-10);
  EXPECT_GT(r.panels, 1);
}

TEST(Quadrature, PanelBudgetExhaustionThrows) {
  auto f = [](double x) { return std::sin(1.0 / (x + 1e-6)); };
  EXPECT_THROW(integrate(f, uniform_panels(0.0, 1.0, 1), {1e-14, 0.0, 8}), NumericalFailure);
}

TEST(Quadrature, SplitKeysAreDistinctAndKeepRoot) {
  const Panel root{0.0, 1.0, root_key(3)};
  const auto kids = split(root);
  EXPECT_NE(kids[0].key, kids[1].key);
  EXPECT_EQ(depth_of(kids[0].key), 1);
  EXPECT_EQ(kids[0].key >> 44, root.key >> 44);
  const auto grand = split(kids[1]);
  EXPECT_EQ(depth_of(grand[0].key), 2);
  EXPECT_DOUBLE_EQ(grand[1].b, 1.0);
  EXPECT_DOUBLE_EQ(grand[0].a, 0.5);
}

TEST(Quadrature, ResultIndependentOfRootOrder) {
  auto f = [](double x) { return std::exp(-x) * std::cos(3.0 * x); };
  auto roots = uniform_panels(0.0, 20.0, 8);
  const Result a = integrate(f, roots, {1e-12, 0.0, 1000});
  std::reverse(roots.begin(), roots.end());
  const Result b = integrate(f, roots, {1e-12, 0.0, 1000});
  EXPECT_EQ(a.value, b.value);
}

TEST(Quadrature, VectorComponentsShareNodes) {
  auto eval = [](const Panel& p) {
    const double mid = 0.5 * (p.a + p.b);
    const double half = 0.5 * (p.b - p.a);
    std::array<double, 21> u{};
    std::array<double, 21> v{};
    for (int i = 0; i < 21; ++i) {
      const double x = mid + half * gk21::node(i);
      u[i] = std::exp(-x);
      v[i] = x * std::exp(-x);
    }
    EstimateN<2> e;
    const auto a = gk21_apply(u, half);
    const auto b = gk21_apply(v, half);
    e.value = {a.value, b.value};
    e.error = {a.error, b.error};
    return e;
  };
  const auto r = integrate_panels_n<2>(uniform_panels(0.0, 60.0, 6), eval, {1e-12, 0.0, 1000});
  EXPECT_NEAR(r.value[0], 1.0, 1e-12);
  EXPECT_NEAR(r.value[1], 1.0, 1e-12);
}
