#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nlburgers/exact.hpp"
#include "nlburgers/metrics.hpp"

using namespace nlb;

namespace {

std::vector<double> random_vector(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(gen);
  return v;
}

}  // namespace

TEST(LpDistance, Examples) {
  const std::vector<double> a{1.0, 2.0, 3.0, 4.0};
  EXPECT_EQ(lp_distance(a, a, 0.1, 1.0), 0.0);
  auto b = a;
  b[1] += 0.5;
  b[3] += 0.5;  // m = 2 cells off by delta = 0.5
  EXPECT_NEAR(lp_distance(a, b, 0.1, 1.0), 2 * 0.1 * 0.5, 1e-15);
  EXPECT_NEAR(lp_distance(a, b, 0.1, 2.0), std::sqrt(2 * 0.1 * 0.25), 1e-15);
  EXPECT_NEAR(lp_distance(a, b, 0.1, 4.0), std::pow(2 * 0.1 * 0.0625, 0.25), 1e-15);
  EXPECT_THROW(lp_distance(a, b, 0.1, 0.5), std::invalid_argument);
  EXPECT_THROW(lp_distance(a, std::vector<double>{1.0}, 0.1, 1.0), std::invalid_argument);
}

TEST(LpDistance, SymmetricAndTriangle) {
  std::mt19937_64 gen(9);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_vector(gen, 50), b = random_vector(gen, 50), c = random_vector(gen, 50);
    for (double p : {1.0, 2.0, 4.0}) {
      EXPECT_DOUBLE_EQ(lp_distance(a, b, 0.02, p), lp_distance(b, a, 0.02, p));
      EXPECT_LE(lp_distance(a, c, 0.02, p), lp_distance(a, b, 0.02, p) + lp_distance(b, c, 0.02, p) + 1e-14);
    }
  }
}

TEST(LpDistance, HolderOrderingOnUnitMeasure) {
  // On a domain of length n h = 1 the L^p norms increase with p.
  std::mt19937_64 gen(10);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_vector(gen, 100), zero = std::vector<double>(100, 0.0);
    const double l1 = lp_distance(a, zero, 0.01, 1.0), l2 = lp_distance(a, zero, 0.01, 2.0),
                 l4 = lp_distance(a, zero, 0.01, 4.0);
    EXPECT_LE(l1, l2 + 1e-15);
    EXPECT_LE(l2, l4 + 1e-15);
  }
}

TEST(LpError, DisplacedShock) {
  // A numerical D-shock at x = 0.3 measured against the exact one at x = 0.5.
  const Grid g = build_grid(-2.0, 2.0, 0.01, 0.5, 1);
  CellField f(g);
  for (std::size_t j = 0; j < g.n_cells; ++j) f[static_cast<std::ptrdiff_t>(j)] = g.center(static_cast<std::ptrdiff_t>(j)) < 0.3 ? 1.0 : 0.0;
  const auto err = lp_error(f, g, exact_nonlocal_D, 1.0, 0.5, ReferenceKind::ExactNonlocalD);
  EXPECT_NEAR(err.value, 0.2, 2 * g.h);
  EXPECT_EQ(err.reference, ReferenceKind::ExactNonlocalD);
  EXPECT_EQ(err.time, 0.5);
}

TEST(Mass, ProjectedData) {
  const Grid g = build_grid(-6.0, 8.0, 0.01, 1.0, 2);
  EXPECT_NEAR(total_mass(project_initial(InitialDatumId::C, g), g), 2.0, 1e-10);
  EXPECT_NEAR(total_mass(project_initial(InitialDatumId::A, g), g), 0.0, 1e-10);
  EXPECT_EQ(total_mass(CellField(g), g), 0.0);
  EXPECT_EQ(half_line_mass(project_initial(InitialDatumId::B, g), g, Side::Right), 0.0);
  EXPECT_NEAR(half_line_mass(project_initial(InitialDatumId::A, g), g, Side::Left), 1.5, 1e-9);
  EXPECT_NEAR(half_line_mass(project_initial(InitialDatumId::A, g), g, Side::Right), -1.5, 1e-9);
  EXPECT_NEAR(half_line_abs_mass(project_initial(InitialDatumId::A, g), g, Side::Right), 1.5, 1e-9);
  EXPECT_EQ(half_line_mass(CellField(g), g, Side::Left), 0.0);
}

TEST(FitRate, ExactPowerLaws) {
  for (double q : {0.5, 1.0, 2.0}) {
    std::vector<ConvergenceRow> rows;
    for (double h : {0.04, 0.02, 0.01, 0.005}) rows.push_back({h, 3.0 * std::pow(h, q)});
    EXPECT_NEAR(fit_rate(rows), q, 1e-12);
  }
}

TEST(FitRate, InvariantUnderScaling) {
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ConvergenceRow> rows, scaled;
    const double a = u(gen), b = u(gen);
    for (double h : {0.1, 0.05, 0.03, 0.01}) {
      const double e = u(gen) * h;
      rows.push_back({h, e});
      scaled.push_back({a * h, b * e});
    }
    EXPECT_NEAR(fit_rate(rows), fit_rate(scaled), 1e-12);
  }
}

TEST(FitRate, RejectsDegenerateInput) {
  EXPECT_THROW(fit_rate(std::vector<ConvergenceRow>{{0.1, 0.2}}), std::invalid_argument);
  EXPECT_THROW(fit_rate(std::vector<ConvergenceRow>{{0.1, 0.2}, {0.1, 0.1}}), std::invalid_argument);
  EXPECT_THROW(fit_rate(std::vector<ConvergenceRow>{{0.1, 0.0}, {0.05, 0.1}}), std::invalid_argument);
}

TEST(ConvergenceTable, MonotonicityAndNaNRate) {
  auto t = make_convergence_table({{0.04, 0.4}, {0.02, 0.2}, {0.01, 0.1}}, ParameterKind::MeshH);
  EXPECT_TRUE(t.strictly_decreasing_errors());
  EXPECT_NEAR(t.fitted_rate, 1.0, 1e-12);
  t = make_convergence_table({{0.04, 0.4}, {0.02, 0.4}}, ParameterKind::Epsilon);
  EXPECT_FALSE(t.strictly_decreasing_errors());
  const double inf = std::numeric_limits<double>::infinity();
  t = make_convergence_table({{0.04, 0.4}, {0.02, inf}}, ParameterKind::Epsilon);
  EXPECT_TRUE(std::isnan(t.fitted_rate));
  EXPECT_FALSE(t.strictly_decreasing_errors());
  EXPECT_THROW(make_convergence_table({{0.02, 0.4}, {0.04, 0.2}}, ParameterKind::MeshH), std::invalid_argument);
}

TEST(FieldSampler, InterpolatesBetweenCenters) {
  const Grid g = build_grid(0.0, 1.0, 0.25, 1.0, 1);
  CellField f(g);
  for (int j = 0; j < 4; ++j) f[j] = j;
  const FieldSampler s(f, g);
  EXPECT_DOUBLE_EQ(s(0.0, 0.125), 0.0);
  EXPECT_DOUBLE_EQ(s(0.0, 0.25), 0.5);
  EXPECT_DOUBLE_EQ(s(0.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(s(0.0, -3.0), 0.0);
  EXPECT_DOUBLE_EQ(s(0.0, 3.0), 3.0);
}
