#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "nlburgers/kernels.hpp"

using namespace nlb;

namespace {

constexpr double pi = std::numbers::pi;

// Beta-function closed forms for alpha * eps^6.
double closed_alpha_unit(KernelFamily f) {
  return f == KernelFamily::IsotropicEven ? 16.0 / (5.0 * pi) : 1024.0 / (5.0 * pi);
}

double support_lo(KernelFamily f, double eps) { return f == KernelFamily::RightSupport ? 0.0 : -eps; }
double support_hi(KernelFamily f, double eps) { return f == KernelFamily::LeftSupport ? 0.0 : eps; }

// Test-side kernel with the closed-form constant.
double oracle_kernel(KernelFamily f, double eps, double x) {
  const double a = support_lo(f, eps), b = support_hi(f, eps);
  if (x < a || x > b) return 0.0;
  return closed_alpha_unit(f) / std::pow(eps, 6) * std::pow(std::abs(x - a) * std::abs(x - b), 2.5);
}

// Composite Simpson with n (even) panels.
template <class F>
double simpson(F&& f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

const KernelFamily families[] = {KernelFamily::IsotropicEven, KernelFamily::LeftSupport, KernelFamily::RightSupport};

CellField unit_spike(const Grid& g, std::ptrdiff_t m) {
  CellField f(g);
  f[m] = 1.0;
  refresh_ghosts(f);
  return f;
}

}  // namespace

TEST(Normalization, MatchesBetaClosedForms) {
  for (auto fam : families)
    for (double eps : {1.0, 0.5, 0.25, 0.1, 0.02, 0.006}) {
      const double alpha = normalization_constant(fam, eps);
      const double expect = closed_alpha_unit(fam) / std::pow(eps, 6);
      EXPECT_NEAR(alpha / expect, 1.0, 1e-8) << to_string(fam) << " eps " << eps;
    }
}

TEST(Normalization, SimpsonOracleIntegratesToOne) {
  for (auto fam : families) {
    const double eps = 0.3;
    const auto spec = make_kernel(fam, eps);
    const double total =
        simpson([&](double x) { return eval_kernel(spec, x); }, support_lo(fam, eps), support_hi(fam, eps), 200000);
    EXPECT_NEAR(total, 1.0, 1e-10) << to_string(fam);
  }
}

TEST(Normalization, RejectsNonPositiveEps) {
  EXPECT_THROW(normalization_constant(KernelFamily::IsotropicEven, 0.0), std::invalid_argument);
  EXPECT_THROW(normalization_constant(KernelFamily::LeftSupport, -1.0), std::invalid_argument);
}

TEST(EvalKernel, PointValues) {
  const double eps = 0.5;
  const auto even = make_kernel(KernelFamily::IsotropicEven, eps);
  EXPECT_NEAR(eval_kernel(even, 0.0), 16.0 / (5.0 * pi * eps), 1e-9);
  EXPECT_EQ(eval_kernel(even, eps), 0.0);
  EXPECT_EQ(eval_kernel(even, 1.01 * eps), 0.0);
  const auto left = make_kernel(KernelFamily::LeftSupport, eps);
  EXPECT_NEAR(eval_kernel(left, -eps / 2), 32.0 / (5.0 * pi * eps), 1e-9);
  EXPECT_EQ(eval_kernel(left, 0.1), 0.0);
  const auto right = make_kernel(KernelFamily::RightSupport, eps);
  EXPECT_NEAR(eval_kernel(right, eps / 2), 32.0 / (5.0 * pi * eps), 1e-9);
  EXPECT_EQ(eval_kernel(right, -0.1), 0.0);
}

TEST(Weights, SumToOneOnTwentyPointGrid) {
  const double eps_h[][2] = {{0.25, 0.01}, {0.25, 0.007}, {0.05, 0.0125}, {0.05, 0.003}, {0.32, 0.005},
                             {0.01, 0.0025}, {0.4, 0.02}, {0.1, 0.03}, {0.0039, 0.000973}};
  for (int i = 0; i < 20; ++i) {
    const auto fam = families[i % 3];
    const auto& eh = eps_h[i % 9];
    const auto w = quadrature_weights(make_kernel(fam, eh[0]), eh[1]);
    double sum = 0.0;
    for (double g : w.gamma) sum += g;
    EXPECT_NEAR(sum, 1.0, 1e-10) << to_string(fam) << " eps " << eh[0] << " h " << eh[1];
  }
}

TEST(Weights, StencilHalfWidth) {
  const auto w = quadrature_weights(make_kernel(KernelFamily::IsotropicEven, 0.25), 0.01);
  EXPECT_EQ(w.ell, 26);
  EXPECT_EQ(w.first_index(), -26);
  EXPECT_EQ(w.last_index(), 25);
  EXPECT_EQ(w.gamma.size(), 52u);
  EXPECT_EQ(quadrature_weights(make_kernel(KernelFamily::IsotropicEven, 0.05), 0.0125).ell, 5);
}

TEST(Weights, MatchSimpsonOracle) {
  for (auto fam : families) {
    const double eps = 0.1, h = 0.013;
    const auto w = quadrature_weights(make_kernel(fam, eps), h);
    for (int k = w.first_index(); k <= w.last_index(); ++k) {
      const double a = std::max(k * h, support_lo(fam, eps));
      const double b = std::min((k + 1) * h, support_hi(fam, eps));
      const double expect = b > a ? simpson([&](double x) { return oracle_kernel(fam, eps, x); }, a, b, 2000) : 0.0;
      EXPECT_NEAR(w(k), expect, 1e-11) << to_string(fam) << " k " << k;
    }
  }
}

TEST(Weights, EvenKernelIsSymmetric) {
  const auto w = quadrature_weights(make_kernel(KernelFamily::IsotropicEven, 0.23), 0.01);
  for (int k = 0; k < w.ell; ++k) EXPECT_NEAR(w(-k - 1), w(k), 1e-15) << k;
}

TEST(Weights, OneSidedKernelsVanishOffSupport) {
  const auto left = quadrature_weights(make_kernel(KernelFamily::LeftSupport, 0.2), 0.01);
  for (int k = 0; k <= left.last_index(); ++k) EXPECT_EQ(left(k), 0.0);
  const auto right = quadrature_weights(make_kernel(KernelFamily::RightSupport, 0.2), 0.01);
  for (int k = right.first_index(); k < 0; ++k) EXPECT_EQ(right(k), 0.0);
}

TEST(Weights, ConsistentUnderRefinement) {
  // gamma_k at h splits into gamma_{2k} + gamma_{2k+1} at h/2.
  for (auto fam : families) {
    const double eps = 0.2;
    const auto coarse = quadrature_weights(make_kernel(fam, eps), 0.02);
    const auto fine = quadrature_weights(make_kernel(fam, eps), 0.01);
    for (int k = coarse.first_index(); k <= coarse.last_index(); ++k) {
      const auto at = [&](int i) { return i >= fine.first_index() && i <= fine.last_index() ? fine(i) : 0.0; };
      EXPECT_NEAR(coarse(k), at(2 * k) + at(2 * k + 1), 1e-13) << to_string(fam) << " k " << k;
    }
  }
}

TEST(Weights, RejectUnresolvedKernel) {
  EXPECT_THROW(quadrature_weights(make_kernel(KernelFamily::IsotropicEven, 0.01), 0.02), std::invalid_argument);
  EXPECT_THROW(quadrature_weights(make_kernel(KernelFamily::IsotropicEven, 0.01), 0.0), std::invalid_argument);
}

TEST(Convolution, UnitSpikeReproducesWeights) {
  const double eps = 0.05, h = 0.01;
  for (auto fam : families) {
    const auto w = quadrature_weights(make_kernel(fam, eps), h);
    const Grid g = build_grid(0.0, 0.4, h, 1.0, static_cast<std::size_t>(w.ell) + 1);
    const std::ptrdiff_t m = 20;
    const auto f = unit_spike(g, m);
    const auto c = convolve_centers(f, w);
    const auto v = convolve_interfaces(f, w);
    ASSERT_EQ(c.size(), g.n_cells);
    ASSERT_EQ(v.size(), g.n_cells + 1);
    for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(g.n_cells); ++j) {
      const auto k = static_cast<int>(j - m);
      const double gk = k >= w.first_index() && k <= w.last_index() ? w(k) : 0.0;
      EXPECT_DOUBLE_EQ(c[static_cast<std::size_t>(j)], gk) << j;
      // V between cells j-1 and j is c_j.
      EXPECT_DOUBLE_EQ(v[static_cast<std::size_t>(j)], gk) << j;
    }
  }
}

TEST(Convolution, ConvexCombinationBound) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-0.7, 1.3);
  for (auto fam : families)
    for (int trial = 0; trial < 10; ++trial) {
      const double h = 0.01, eps = 0.03 + 0.02 * trial;
      const auto w = quadrature_weights(make_kernel(fam, eps), h);
      const Grid g = build_grid(-1.0, 1.0, h, 1.0, static_cast<std::size_t>(w.ell) + 1);
      CellField f(g);
      double lo = 1e300, hi = -1e300;
      for (auto& x : f.interior()) {
        x = u(gen);
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
      refresh_ghosts(f);
      for (double cj : convolve_centers(f, w)) {
        EXPECT_GE(cj, lo - 1e-12);
        EXPECT_LE(cj, hi + 1e-12);
      }
    }
}

TEST(Convolution, ConstantFieldIsFixed) {
  const auto w = quadrature_weights(make_kernel(KernelFamily::IsotropicEven, 0.1), 0.01);
  const Grid g = build_grid(0.0, 1.0, 0.01, 1.0, static_cast<std::size_t>(w.ell) + 1);
  CellField f(g);
  for (auto& x : f.values) x = 0.7;
  for (double cj : convolve_centers(f, w)) EXPECT_NEAR(cj, 0.7, 1e-12);
}

TEST(Convolution, NeedsGhostCover) {
  const auto w = quadrature_weights(make_kernel(KernelFamily::IsotropicEven, 0.1), 0.01);
  const Grid g = build_grid(0.0, 1.0, 0.01, 1.0, 3);
  CellField f(g);
  EXPECT_THROW(convolve_centers(f, w), std::invalid_argument);
  EXPECT_THROW(convolve_interfaces(f, w), std::invalid_argument);
}
