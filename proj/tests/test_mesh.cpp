#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "nlburgers/mesh.hpp"

using namespace nlb;

namespace {

// h * sum of cell averages, the discrete mass of a projected datum.
double projected_mass(InitialDatumId d, const Grid& g) {
  const auto f = project_initial(d, g);
  double s = 0.0;
  for (double v : f.interior()) s += v;
  return s * g.h;
}

}  // namespace

TEST(Grid, CellCountAndTimeStep) {
  const Grid g = build_grid(-6.0, 8.0, 0.01, 2.0, 2);
  EXPECT_EQ(g.n_cells, 1400u);
  EXPECT_DOUBLE_EQ(g.dt, 0.01 / 6.0);
  EXPECT_EQ(g.storage_size(), 1404u);
}

TEST(Grid, CentersAndInterfaces) {
  const Grid g = build_grid(-2.0, 2.0, 1.0, 1.0, 1);
  ASSERT_EQ(g.n_cells, 4u);
  const double expect[] = {-1.5, -0.5, 0.5, 1.5};
  for (int j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(g.center(j), expect[j]);
  EXPECT_DOUBLE_EQ(g.interface(0), -2.0);
  EXPECT_DOUBLE_EQ(g.interface(4), 2.0);
}

TEST(Grid, RejectsIncommensurateWidth) {
  EXPECT_THROW(build_grid(0.0, 1.0, 0.3, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(build_grid(1.0, 0.0, 0.1, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(build_grid(0.0, 1.0, -0.1, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(build_grid(0.0, 1.0, 0.1, -1.0, 1), std::invalid_argument);
}

TEST(Projection, CellStraddlingJump) {
  // D on a cell centered at 0 is half full.
  const Grid g = build_grid(-0.5, 0.5, 1.0, 1.0, 1);
  EXPECT_DOUBLE_EQ(project_initial(InitialDatumId::D, g)[0], 0.5);
}

TEST(Projection, KnownCellAverages) {
  const Grid g = build_grid(-2.0, 2.0, 0.5, 1.0, 1);
  const auto a = project_initial(InitialDatumId::A, g);
  EXPECT_DOUBLE_EQ(a[2], 1.0);   // [-1, -0.5]
  EXPECT_DOUBLE_EQ(a[5], -1.0);  // [0.5, 1]
  const auto f = project_initial(InitialDatumId::F, g);
  EXPECT_DOUBLE_EQ(f[2], 0.25);  // (x+1) on [-1, -0.5]
  EXPECT_DOUBLE_EQ(f[3], 0.75);
}

TEST(Projection, MassOfEachDatum) {
  const Grid g = build_grid(-6.0, 8.0, 0.01, 1.0, 2);
  EXPECT_NEAR(projected_mass(InitialDatumId::A, g), 0.0, 1e-13);
  EXPECT_NEAR(projected_mass(InitialDatumId::B, g), 1.0, 1e-12);
  EXPECT_NEAR(projected_mass(InitialDatumId::C, g), 2.0, 1e-12);
  EXPECT_NEAR(projected_mass(InitialDatumId::F, g), 0.5, 1e-12);
  // E: 1/2 over [-2, 0] from the sine bump plus 1/2 per unit on [0, 8].
  EXPECT_NEAR(projected_mass(InitialDatumId::E, g), 0.5 + 4.0, 1e-12);
}

TEST(Projection, MassIndependentOfMesh) {
  for (double h : {0.1, 0.05, 0.02, 0.004}) {
    const Grid g = build_grid(-3.0, 3.0, h, 1.0, 1);
    EXPECT_NEAR(projected_mass(InitialDatumId::F, g), 0.5, 1e-12) << "h = " << h;
  }
}

TEST(Ghosts, ConstantExtrapolation) {
  const Grid g = build_grid(0.0, 3.0, 1.0, 1.0, 2);
  CellField f(g);
  f[0] = 4.0;
  f[1] = 5.0;
  f[2] = 6.0;
  refresh_ghosts(f);
  EXPECT_EQ(f[-1], 4.0);
  EXPECT_EQ(f[-2], 4.0);
  EXPECT_EQ(f[3], 6.0);
  EXPECT_EQ(f[4], 6.0);
}

TEST(Ghosts, RejectsInconsistentField) {
  const Grid g = build_grid(0.0, 3.0, 1.0, 1.0, 2);
  CellField f(g);
  f.values.pop_back();
  EXPECT_THROW(refresh_ghosts(f), std::invalid_argument);
}

TEST(Projection, MonotoneDataGiveMonotoneAverages) {
  // F increases on [-1, 0]; so must its averages on any mesh.
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.002, 0.05);
  for (int trial = 0; trial < 20; ++trial) {
    const double h = 1.0 / std::round(1.0 / u(gen));
    const Grid g = build_grid(-1.0, 0.0, h, 1.0, 1);
    const auto f = project_initial(InitialDatumId::F, g);
    for (std::size_t j = 1; j < g.n_cells; ++j)
      EXPECT_LT(f[static_cast<std::ptrdiff_t>(j) - 1], f[static_cast<std::ptrdiff_t>(j)]);
  }
}
