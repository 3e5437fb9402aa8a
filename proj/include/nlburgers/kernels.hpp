#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nlburgers/mesh.hpp"

namespace nlb {

/** Convolution-kernel families, all of the form alpha * (|x - a||x - b|)^(5/2)
 *  on their support [a, b]:
 *
 *    IsotropicEven  [-eps, eps]
 *    LeftSupport    [-eps, 0]
 *    RightSupport   [0, eps]
 */
enum class KernelFamily { IsotropicEven, LeftSupport, RightSupport };

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::IsotropicEven: return "even";
    case KernelFamily::LeftSupport: return "left";
    case KernelFamily::RightSupport: return "right";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(std::string_view s) {
  if (s == "even") return KernelFamily::IsotropicEven;
  if (s == "left") return KernelFamily::LeftSupport;
  if (s == "right") return KernelFamily::RightSupport;
  throw std::invalid_argument("unknown kernel family '" + std::string(s) + "'");
}

struct KernelSpec {
  KernelFamily family = KernelFamily::IsotropicEven;
  double eps = 0.0;
  double alpha = 0.0;
};

namespace detail {

inline constexpr double quadrature_tolerance = 1e-12;
inline constexpr unsigned quadrature_depth = 15;

// Support of the unit-radius profile.
struct Support {
  double lo;
  double hi;
};

inline Support unit_support(KernelFamily f) {
  switch (f) {
    case KernelFamily::IsotropicEven: return {-1.0, 1.0};
    case KernelFamily::LeftSupport: return {-1.0, 0.0};
    case KernelFamily::RightSupport: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

// Unnormalized profile for eps = 1; zero outside the support.
inline double unit_profile(KernelFamily f, double u) {
  const auto [lo, hi] = unit_support(f);
  if (u < lo || u > hi) return 0.0;
  return std::pow(std::abs(u - lo) * std::abs(u - hi), 2.5);
}

// Integral of the unit profile over [a, b] clipped to the support.
inline double unit_profile_integral(KernelFamily f, double a, double b) {
  const auto [lo, hi] = unit_support(f);
  const double l = std::max(a, lo);
  const double u = std::min(b, hi);
  if (!(u > l)) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
      [f](double x) { return unit_profile(f, x); }, l, u, quadrature_depth, quadrature_tolerance);
}

// alpha for eps = 1, one quadrature per family for the lifetime of the process.
inline double unit_alpha(KernelFamily f) {
  static const double even = 1.0 / unit_profile_integral(KernelFamily::IsotropicEven, -1.0, 1.0);
  static const double left = 1.0 / unit_profile_integral(KernelFamily::LeftSupport, -1.0, 0.0);
  static const double right = 1.0 / unit_profile_integral(KernelFamily::RightSupport, 0.0, 1.0);
  switch (f) {
    case KernelFamily::IsotropicEven: return even;
    case KernelFamily::LeftSupport: return left;
    case KernelFamily::RightSupport: return right;
  }
  return 0.0;
}

}  // namespace detail

/// alpha_eps making the family integrate to one. The profile scales as
/// eps^6 under x = eps u, so the quadrature runs on the unit profile.
inline double normalization_constant(KernelFamily family, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("normalization_constant: eps must be positive");
  return detail::unit_alpha(family) / std::pow(eps, 6);
}

inline KernelSpec make_kernel(KernelFamily family, double eps) {
  return {family, eps, normalization_constant(family, eps)};
}

inline double eval_kernel(const KernelSpec& spec, double x) {
  const auto [lo, hi] = detail::unit_support(spec.family);
  const double a = lo * spec.eps;
  const double b = hi * spec.eps;
  if (x < a || x > b) return 0.0;
  return spec.alpha * std::pow(std::abs(x - a) * std::abs(x - b), 2.5);
}

/** Cell integrals gamma_k of eta_eps over [k h, (k+1) h], k = -ell .. ell-1,
 *  with ell = floor(eps / h) + 1.
 */
struct QuadratureWeights {
  std::vector<double> gamma;  // gamma[k + ell]
  int ell = 0;
  double h = 0.0;

  double operator()(int k) const { return gamma[static_cast<std::size_t>(k + ell)]; }
  int first_index() const { return -ell; }
  int last_index() const { return ell - 1; }
};

inline QuadratureWeights quadrature_weights(const KernelSpec& spec, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("quadrature_weights: h must be positive");
  if (h > spec.eps)
    throw std::invalid_argument("quadrature_weights: kernel unresolvable, h = " + std::to_string(h) +
                                " exceeds eps = " + std::to_string(spec.eps));
  QuadratureWeights w;
  w.h = h;
  w.ell = static_cast<int>(std::floor(spec.eps / h)) + 1;
  w.gamma.resize(static_cast<std::size_t>(2 * w.ell));
  const double scale = detail::unit_alpha(spec.family);
  for (int k = -w.ell; k < w.ell; ++k) {
    const double a = static_cast<double>(k) * h / spec.eps;
    const double b = static_cast<double>(k + 1) * h / spec.eps;
    w.gamma[static_cast<std::size_t>(k + w.ell)] = scale * detail::unit_profile_integral(spec.family, a, b);
  }
  return w;
}

namespace detail {

// Reversed weights so that c_j is a contiguous dot product:
// c_j = sum_m taps[m] * rho[j - ell + 1 + offset + m]. Leading and trailing
// zero weights are dropped; for finite fields this leaves every sum bitwise
// unchanged.
struct ConvolutionTaps {
  std::vector<double> taps;
  std::ptrdiff_t offset = 0;  // relative to j - ell + 1
  std::ptrdiff_t reach_left = 0;
  std::ptrdiff_t reach_right = 0;

  explicit ConvolutionTaps(const QuadratureWeights& w) {
    const auto n = static_cast<std::ptrdiff_t>(w.gamma.size());
    std::vector<double> rev(w.gamma.rbegin(), w.gamma.rend());
    std::ptrdiff_t first = 0;
    std::ptrdiff_t last = n;
    while (first < last && rev[static_cast<std::size_t>(first)] == 0.0) ++first;
    while (last > first && rev[static_cast<std::size_t>(last - 1)] == 0.0) --last;
    taps.assign(rev.begin() + first, rev.begin() + last);
    offset = first;
    reach_left = w.ell - 1 - first;     // c_j reads rho[j - reach_left] ...
    reach_right = (last - 1) - (w.ell - 1);  // ... through rho[j + reach_right]
  }

  // c_j for j in [first, last) (interior-relative), written to out[j - first].
  void apply(const CellField& field, std::ptrdiff_t first, std::ptrdiff_t last, std::span<double> out) const {
    const auto g = static_cast<std::ptrdiff_t>(field.n_ghost);
    const double* base = field.values.data();
    const std::size_t n = taps.size();
    for (std::ptrdiff_t j = first; j < last; ++j) {
      const double* rho = base + (j + g - reach_left);
      double acc = 0.0;
      for (std::size_t m = 0; m < n; ++m) acc += taps[m] * rho[m];
      out[static_cast<std::size_t>(j - first)] = acc;
    }
  }
};

inline void require_ghost_width(const CellField& field, const QuadratureWeights& w, const char* who) {
  if (field.n_ghost < static_cast<std::size_t>(w.ell) + 1)
    throw std::invalid_argument(std::string(who) + ": need at least ell + 1 = " + std::to_string(w.ell + 1) +
                                " ghost cells, field has " + std::to_string(field.n_ghost));
}

}  // namespace detail

/// c_j = sum_k gamma_k rho_{j-k} at every interior cell.
inline std::vector<double> convolve_centers(const CellField& field, const QuadratureWeights& w) {
  detail::require_ghost_width(field, w, "convolve_centers");
  std::vector<double> c(field.n_cells);
  detail::ConvolutionTaps(w).apply(field, 0, static_cast<std::ptrdiff_t>(field.n_cells), c);
  return c;
}

/// V at every interior interface i = 0 .. n_cells (between cells i-1 and i);
/// V_{j+1/2} = sum_k gamma_k rho_{j-k+1}, which is c_{j+1}.
inline std::vector<double> convolve_interfaces(const CellField& field, const QuadratureWeights& w) {
  detail::require_ghost_width(field, w, "convolve_interfaces");
  std::vector<double> v(field.n_cells + 1);
  detail::ConvolutionTaps(w).apply(field, 0, static_cast<std::ptrdiff_t>(field.n_cells) + 1, v);
  return v;
}

}  // namespace nlb
