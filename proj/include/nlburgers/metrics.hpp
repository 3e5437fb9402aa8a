#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "nlburgers/mesh.hpp"

namespace nlb {

enum class ReferenceKind { ExactLocal, ExactNonlocalD, FineMeshGodunov };

inline std::string_view to_string(ReferenceKind r) {
  switch (r) {
    case ReferenceKind::ExactLocal: return "exact_local";
    case ReferenceKind::ExactNonlocalD: return "exact_nonlocal_D";
    case ReferenceKind::FineMeshGodunov: return "fine_mesh_godunov";
  }
  return "?";
}

struct ErrorReport {
  double p = 1.0;
  double value = 0.0;
  double time = 0.0;
  ReferenceKind reference = ReferenceKind::ExactLocal;
};

/// Reference solution evaluated at (t, x).
using ReferenceSampler = std::function<double(double, double)>;

/// (h sum |a_j - b_j|^p)^(1/p).
inline double lp_distance(std::span<const double> a, std::span<const double> b, double h, double p) {
  if (a.size() != b.size()) throw std::invalid_argument("lp_distance: size mismatch");
  if (!(p >= 1.0)) throw std::invalid_argument("lp_distance: need p >= 1");
  double sum = 0.0;
  if (p == 1.0) {
    for (std::size_t j = 0; j < a.size(); ++j) sum += std::abs(a[j] - b[j]);
    return h * sum;
  }
  for (std::size_t j = 0; j < a.size(); ++j) sum += std::pow(std::abs(a[j] - b[j]), p);
  return std::pow(h * sum, 1.0 / p);
}

/// Reference sampled at the interior cell centers.
inline std::vector<double> sample_reference(const Grid& grid, const ReferenceSampler& ref, double t) {
  std::vector<double> out(grid.n_cells);
  for (std::size_t j = 0; j < grid.n_cells; ++j) out[j] = ref(t, grid.center(static_cast<std::ptrdiff_t>(j)));
  return out;
}

/// L^p error against a reference sampled at cell midpoints.
inline ErrorReport lp_error(const CellField& field, const Grid& grid, const ReferenceSampler& reference, double p,
                            double t, ReferenceKind kind = ReferenceKind::ExactLocal) {
  const auto samples = sample_reference(grid, reference, t);
  return {p, lp_distance(field.interior(), samples, grid.h, p), t, kind};
}

inline double total_mass(const CellField& field, const Grid& grid) {
  double sum = 0.0;
  for (double v : field.interior()) sum += v;
  return grid.h * sum;
}

enum class Side { Left, Right };

/// Signed mass h * sum rho_j over the cells whose center lies on the given
/// side of x = 0.
inline double half_line_mass(const CellField& field, const Grid& grid, Side side) {
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.n_cells; ++j) {
    const auto jj = static_cast<std::ptrdiff_t>(j);
    const double x = grid.center(jj);
    if ((side == Side::Left && x < 0.0) || (side == Side::Right && x > 0.0)) sum += field[jj];
  }
  return grid.h * sum;
}

/// h * sum |rho_j| over the cells whose center lies on the given side of 0.
inline double half_line_abs_mass(const CellField& field, const Grid& grid, Side side) {
  double sum = 0.0;
  for (std::size_t j = 0; j < grid.n_cells; ++j) {
    const auto jj = static_cast<std::ptrdiff_t>(j);
    const double x = grid.center(jj);
    if ((side == Side::Left && x < 0.0) || (side == Side::Right && x > 0.0)) sum += std::abs(field[jj]);
  }
  return grid.h * sum;
}

enum class ParameterKind { MeshH, Epsilon };

struct ConvergenceRow {
  double parameter = 0.0;
  double error = 0.0;
};

/// Least-squares slope of log(error) against log(parameter).
inline double fit_rate(std::span<const ConvergenceRow> rows) {
  if (rows.size() < 2) throw std::invalid_argument("fit_rate: need at least two rows");
  double sx = 0.0, sy = 0.0;
  for (const auto& r : rows) {
    if (!(r.parameter > 0.0) || !(r.error > 0.0))
      throw std::invalid_argument("fit_rate: parameters and errors must be positive");
    sx += std::log(r.parameter);
    sy += std::log(r.error);
  }
  const double n = static_cast<double>(rows.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxy = 0.0, sxx = 0.0;
  for (const auto& r : rows) {
    const double dx = std::log(r.parameter) - mx;
    sxy += dx * (std::log(r.error) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_rate: parameters must not all coincide");
  return sxy / sxx;
}

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double fitted_rate = 0.0;
  ParameterKind parameter_kind = ParameterKind::MeshH;

  bool strictly_decreasing_errors() const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].error < rows[i - 1].error)) return false;
    return true;
  }
};

/// Rows must arrive with strictly decreasing parameters. A series holding a
/// non-finite error (a diverged run) gets a NaN rate.
inline ConvergenceTable make_convergence_table(std::vector<ConvergenceRow> rows, ParameterKind kind) {
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].parameter < rows[i - 1].parameter))
      throw std::invalid_argument("make_convergence_table: parameters must be strictly decreasing");
  ConvergenceTable table;
  table.parameter_kind = kind;
  const bool finite = std::all_of(rows.begin(), rows.end(), [](const ConvergenceRow& r) { return std::isfinite(r.error); });
  if (rows.size() < 2) table.fitted_rate = 0.0;
  else table.fitted_rate = finite ? fit_rate(rows) : std::numeric_limits<double>::quiet_NaN();
  table.rows = std::move(rows);
  return table;
}

/** Piecewise-linear interpolant through the cell centers of a field, held
 *  constant beyond the outermost centers. Used to sample a fine-mesh
 *  reference at coarse-mesh midpoints.
 */
class FieldSampler {
 public:
  FieldSampler(const CellField& field, const Grid& grid)
      : values_(field.interior().begin(), field.interior().end()), x_lo_(grid.x_lo), h_(grid.h) {}

  double operator()(double /*t*/, double x) const {
    const double s = (x - x_lo_) / h_ - 0.5;
    if (s <= 0.0) return values_.front();
    const auto last = static_cast<double>(values_.size() - 1);
    if (s >= last) return values_.back();
    const auto i = static_cast<std::size_t>(std::floor(s));
    const double w = s - static_cast<double>(i);
    return (1.0 - w) * values_[i] + w * values_[i + 1];
  }

 private:
  std::vector<double> values_;
  double x_lo_;
  double h_;
};

}  // namespace nlb
