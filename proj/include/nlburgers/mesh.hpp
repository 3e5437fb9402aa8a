#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "nlburgers/exact.hpp"

namespace nlb {

inline constexpr double default_cfl_ratio = 1.0 / 6.0;

/** Uniform 1-D space-time mesh.
 *
 *  Interior cells are indexed j = 0 .. n_cells-1 with centers
 *  x_lo + (j + 1/2) h. Interface i = 0 .. n_cells sits at x_lo + i h and
 *  separates cells i-1 and i. The time step is always h * cfl_ratio.
 */
struct Grid {
  double x_lo = 0.0;
  double x_hi = 0.0;
  double h = 0.0;
  std::size_t n_cells = 0;
  double dt = 0.0;
  double cfl_ratio = default_cfl_ratio;
  double t_final = 0.0;
  std::size_t n_ghost = 0;

  double center(std::ptrdiff_t j) const {
    return x_lo + (static_cast<double>(j) + 0.5) * h;
  }
  double interface(std::ptrdiff_t i) const { return x_lo + static_cast<double>(i) * h; }
  std::size_t storage_size() const { return n_cells + 2 * n_ghost; }
};

/// Builds a grid; the domain length must be an integer multiple of h
/// (to within 1e-9 cells).
inline Grid build_grid(double x_lo, double x_hi, double h, double t_final,
                       std::size_t n_ghost, double cfl_ratio = default_cfl_ratio) {
  if (!(x_lo < x_hi)) throw std::invalid_argument("build_grid: need x_lo < x_hi");
  if (!(h > 0.0)) throw std::invalid_argument("build_grid: need h > 0");
  if (!(t_final >= 0.0)) throw std::invalid_argument("build_grid: need t_final >= 0");
  if (!(cfl_ratio > 0.0)) throw std::invalid_argument("build_grid: need cfl_ratio > 0");
  const double cells = (x_hi - x_lo) / h;
  const double rounded = std::round(cells);
  if (std::abs(cells - rounded) > 1e-9 || rounded < 1.0) {
    std::ostringstream msg;
    msg << "build_grid: domain [" << x_lo << ", " << x_hi << "] is not a whole number of cells of width "
        << h << " (" << cells << " cells)";
    throw std::invalid_argument(msg.str());
  }
  Grid g;
  g.x_lo = x_lo;
  g.x_hi = x_hi;
  g.h = h;
  g.n_cells = static_cast<std::size_t>(rounded);
  g.cfl_ratio = cfl_ratio;
  g.dt = h * cfl_ratio;
  g.t_final = t_final;
  g.n_ghost = n_ghost;
  return g;
}

/** Piecewise-constant state at one time level, ghost cells included.
 *
 *  operator[] takes interior-relative indices, so ghosts are reachable as
 *  j = -n_ghost .. -1 and j = n_cells .. n_cells + n_ghost - 1.
 */
struct CellField {
  std::vector<double> values;
  double time = 0.0;
  std::size_t n_cells = 0;
  std::size_t n_ghost = 0;

  CellField() = default;
  explicit CellField(const Grid& grid, double t = 0.0)
      : values(grid.storage_size(), 0.0), time(t), n_cells(grid.n_cells), n_ghost(grid.n_ghost) {}

  double& operator[](std::ptrdiff_t j) { return values[static_cast<std::size_t>(j + static_cast<std::ptrdiff_t>(n_ghost))]; }
  double operator[](std::ptrdiff_t j) const { return values[static_cast<std::size_t>(j + static_cast<std::ptrdiff_t>(n_ghost))]; }

  std::span<double> interior() { return {values.data() + n_ghost, n_cells}; }
  std::span<const double> interior() const { return {values.data() + n_ghost, n_cells}; }
};

enum class BoundaryMode { ConstantExtrapolation };

struct BoundaryPolicy {
  BoundaryMode mode = BoundaryMode::ConstantExtrapolation;
};

/// Ghost cells copy the nearest interior value.
inline void refresh_ghosts(CellField& field, BoundaryPolicy policy = {}) {
  if (field.values.size() != field.n_cells + 2 * field.n_ghost || field.n_cells == 0)
    throw std::invalid_argument("refresh_ghosts: inconsistent field length");
  switch (policy.mode) {
    case BoundaryMode::ConstantExtrapolation: {
      const double left = field.values[field.n_ghost];
      const double right = field.values[field.n_ghost + field.n_cells - 1];
      for (std::size_t g = 0; g < field.n_ghost; ++g) {
        field.values[g] = left;
        field.values[field.n_ghost + field.n_cells + g] = right;
      }
      break;
    }
  }
}

/// Cell averages of the datum, ghosts refreshed.
inline CellField project_initial(InitialDatumId datum, const Grid& grid,
                                 BoundaryPolicy policy = {}) {
  CellField field(grid, 0.0);
  for (std::size_t j = 0; j < grid.n_cells; ++j) {
    const auto jj = static_cast<std::ptrdiff_t>(j);
    field[jj] = datum_cell_average(datum, grid.interface(jj), grid.interface(jj + 1));
  }
  refresh_ghosts(field, policy);
  return field;
}

}  // namespace nlb
