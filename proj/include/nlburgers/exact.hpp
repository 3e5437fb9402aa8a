#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include <boost/math/quadrature/gauss.hpp>

namespace nlb {

/** Initial data of the benchmark catalog.
 *
 *  A: odd datum (x+2)1_[-2,-1] + 1_[-1,0] - 1_[0,1] + (x-2)1_[1,2]
 *  B: 1_[-1,0]
 *  C: 1_[-1,1]
 *  D: 1_(-inf,0]
 *  E: (1 + sin(pi x/2 + pi/2))/4 on [-2,0], 1/2 on [0,inf)
 *  F: (x+1)1_[-1,0]
 */
enum class InitialDatumId { A, B, C, D, E, F };

inline constexpr std::array<InitialDatumId, 6> all_data{
    InitialDatumId::A, InitialDatumId::B, InitialDatumId::C,
    InitialDatumId::D, InitialDatumId::E, InitialDatumId::F};

inline std::string_view to_string(InitialDatumId id) {
  switch (id) {
    case InitialDatumId::A: return "A";
    case InitialDatumId::B: return "B";
    case InitialDatumId::C: return "C";
    case InitialDatumId::D: return "D";
    case InitialDatumId::E: return "E";
    case InitialDatumId::F: return "F";
  }
  return "?";
}

inline InitialDatumId parse_datum(std::string_view s) {
  for (auto id : all_data)
    if (s == to_string(id)) return id;
  throw std::invalid_argument("unknown initial datum '" + std::string(s) + "'");
}

namespace detail {

// One piece of a piecewise datum, living on the half-open interval (lo, hi].
// Half-open on the left means a jump point takes the left-limit value.
struct DatumPiece {
  enum class Shape { Linear, Sine };
  double lo;
  double hi;
  Shape shape;
  double a = 0.0;  // Linear: a + b x
  double b = 0.0;

  double value(double x) const {
    if (shape == Shape::Linear) return a + b * x;
    return 0.25 * (1.0 + std::sin(0.5 * std::numbers::pi * x + 0.5 * std::numbers::pi));
  }

  // Integral over [l, u] with l, u inside [lo, hi].
  double integral(double l, double u) const {
    if (shape == Shape::Linear) return a * (u - l) + 0.5 * b * (u * u - l * l);
    return boost::math::quadrature::gauss<double, 7>::integrate(
        [this](double x) { return value(x); }, l, u);
  }
};

inline std::span<const DatumPiece> datum_pieces(InitialDatumId id) {
  using S = DatumPiece::Shape;
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const DatumPiece a[] = {{-2, -1, S::Linear, 2, 1},
                                 {-1, 0, S::Linear, 1, 0},
                                 {0, 1, S::Linear, -1, 0},
                                 {1, 2, S::Linear, -2, 1}};
  static const DatumPiece b[] = {{-1, 0, S::Linear, 1, 0}};
  static const DatumPiece c[] = {{-1, 1, S::Linear, 1, 0}};
  static const DatumPiece d[] = {{-inf, 0, S::Linear, 1, 0}};
  static const DatumPiece e[] = {{-2, 0, S::Sine}, {0, inf, S::Linear, 0.5, 0}};
  static const DatumPiece f[] = {{-1, 0, S::Linear, 1, 1}};
  switch (id) {
    case InitialDatumId::A: return a;
    case InitialDatumId::B: return b;
    case InitialDatumId::C: return c;
    case InitialDatumId::D: return d;
    case InitialDatumId::E: return e;
    case InitialDatumId::F: return f;
  }
  throw std::invalid_argument("unknown initial datum");
}

}  // namespace detail

/// Pointwise datum value; jump points take the left-limit value.
inline double initial_datum(InitialDatumId id, double x) {
  for (const auto& piece : detail::datum_pieces(id))
    if (x > piece.lo && x <= piece.hi) return piece.value(x);
  return 0.0;
}

/// Exact average of the datum over [a, b]. Linear pieces are integrated in
/// closed form, the sinusoidal piece of E by 7-point Gauss-Legendre.
inline double datum_cell_average(InitialDatumId id, double a, double b) {
  if (!(b > a)) throw std::invalid_argument("datum_cell_average: empty cell");
  double sum = 0.0;
  for (const auto& piece : detail::datum_pieces(id)) {
    const double l = std::max(a, piece.lo);
    const double u = std::min(b, piece.hi);
    if (u > l) sum += piece.integral(l, u);
  }
  return sum / (b - a);
}

/// True for the data whose local entropy solution is known in closed form.
inline bool has_exact_local(InitialDatumId id) {
  return id == InitialDatumId::A || id == InitialDatumId::B ||
         id == InitialDatumId::C || id == InitialDatumId::D;
}

/** Entropy solution of the local Burgers equation rho_t + (rho^2)_x = 0.
 *
 *  Regions are tested left to right as closed intervals; the first match
 *  wins. Adjacent formulas agree at shared endpoints except across shocks.
 *  Only A, B, C and D have closed forms; E and F throw.
 */
inline double exact_local(InitialDatumId id, double t, double x) {
  if (t < 0.0) throw std::invalid_argument("exact_local: negative time");
  if (!has_exact_local(id))
    throw std::invalid_argument("exact_local: no closed form for datum " +
                                std::string(to_string(id)));
  if (t == 0.0) return initial_datum(id, x);
  const auto in = [x](double l, double u) { return x >= l && x <= u; };

  switch (id) {
    case InitialDatumId::A: {
      const double s = 2.0 * t + 1.0;
      if (t <= 0.5) {
        if (in(-2.0, 2.0 * t - 1.0)) return (x + 2.0) / s;
        if (in(2.0 * t - 1.0, 0.0)) return 1.0;
        if (in(0.0, 1.0 - 2.0 * t)) return -1.0;
        if (in(1.0 - 2.0 * t, 2.0)) return (x - 2.0) / s;
        return 0.0;
      }
      if (in(-2.0, 0.0)) return (x + 2.0) / s;
      if (in(0.0, 2.0)) return (x - 2.0) / s;
      return 0.0;
    }
    case InitialDatumId::B:
      if (t <= 1.0) {
        if (in(-1.0, 2.0 * t - 1.0)) return (x + 1.0) / (2.0 * t);
        if (x > 2.0 * t - 1.0 && x <= t) return 1.0;
        return 0.0;
      }
      if (in(-1.0, 2.0 * std::sqrt(t) - 1.0)) return (x + 1.0) / (2.0 * t);
      return 0.0;
    case InitialDatumId::C:
      if (t <= 2.0) {
        if (in(-1.0, 2.0 * t - 1.0)) return (x + 1.0) / (2.0 * t);
        if (in(2.0 * t - 1.0, t + 1.0)) return 1.0;
        return 0.0;
      }
      if (in(-1.0, 2.0 * std::sqrt(2.0 * t) - 1.0)) return (x + 1.0) / (2.0 * t);
      return 0.0;
    case InitialDatumId::D:
      return x <= t ? 1.0 : 0.0;
    default:
      break;
  }
  return 0.0;
}

/// Nonlocal solution for datum D under a kernel supported on [0, eps]: the
/// same shock x = t as the local problem, for every eps.
inline double exact_nonlocal_D(double t, double x) {
  return exact_local(InitialDatumId::D, t, x);
}

}  // namespace nlb
