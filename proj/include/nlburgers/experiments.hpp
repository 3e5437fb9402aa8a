#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlburgers/exact.hpp"
#include "nlburgers/kernels.hpp"
#include "nlburgers/mesh.hpp"
#include "nlburgers/metrics.hpp"
#include "nlburgers/schemes.hpp"

#ifndef NLB_GIT_DESCRIBE
#define NLB_GIT_DESCRIBE "unknown"
#endif

namespace nlb {

// ---------------------------------------------------------------------------
// Output formatting

/// Shortest representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Snapshot CSV: x_center,rho over the interior cells.
inline void write_snapshot_csv(const std::filesystem::path& path, const CellField& field, const Grid& grid) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "x_center,rho\r\n";
  for (std::size_t j = 0; j < grid.n_cells; ++j) {
    const auto jj = static_cast<std::ptrdiff_t>(j);
    out << format_double(grid.center(jj)) << ',' << format_double(field[jj]) << "\r\n";
  }
}

inline void write_diagnostics_csv(const std::filesystem::path& path, const std::vector<StepDiagnostics>& diags) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "step,time,total_mass,right_mass,right_sup\r\n";
  for (const auto& d : diags)
    out << d.step << ',' << format_double(d.time) << ',' << format_double(d.total_mass) << ','
        << format_double(d.right_mass) << ',' << format_double(d.right_sup) << "\r\n";
}

// ---------------------------------------------------------------------------
// Test and sweep descriptions

enum class TestNumber { T1 = 1, T2, T3, T4, T5, T6, T7 };
enum class Variant { FixedH, CoupledH };

struct TestId {
  TestNumber number = TestNumber::T1;
  std::optional<Variant> variant;
};

inline std::string to_string(TestNumber t) { return "T" + std::to_string(static_cast<int>(t)); }
inline std::string_view to_string(Variant v) { return v == Variant::FixedH ? "fixed" : "coupled"; }

inline TestNumber parse_test_number(std::string_view s) {
  if (s.size() == 2 && (s[0] == 'T' || s[0] == 't') && s[1] >= '1' && s[1] <= '7')
    return static_cast<TestNumber>(s[1] - '0');
  throw std::invalid_argument("unknown test '" + std::string(s) + "' (expected T1..T7)");
}

inline Variant parse_variant(std::string_view s) {
  if (s == "fixed") return Variant::FixedH;
  if (s == "coupled") return Variant::CoupledH;
  throw std::invalid_argument("unknown variant '" + std::string(s) + "' (expected fixed|coupled)");
}

/** How the mesh width follows the kernel radius.
 *
 *  Fixed:   h = c for every eps.
 *  Coupled: h = c * eps^exponent.
 *  Ladder:  a mesh-refinement sweep over the listed h values; when eps values
 *           are present, each eps keeps the first `ladder_rows` entries that
 *           satisfy eps/h >= min_resolution (0 keeps them all).
 */
struct HRule {
  enum class Kind { Fixed, Coupled, Ladder };
  Kind kind = Kind::Fixed;
  double c = 0.0;
  double exponent = 1.0;
  std::vector<double> ladder;
  std::size_t ladder_rows = 0;

  static HRule fixed(double h) { return {Kind::Fixed, h, 1.0, {}, 0}; }
  static HRule coupled(double c, double exponent) { return {Kind::Coupled, c, exponent, {}, 0}; }
  static HRule mesh_ladder(std::vector<double> hs, std::size_t rows = 0) {
    return {Kind::Ladder, 0.0, 1.0, std::move(hs), rows};
  }

  std::string describe() const {
    switch (kind) {
      case Kind::Fixed: return "fixed(h=" + format_double(c) + ")";
      case Kind::Coupled: return "coupled(h=" + format_double(c) + "*eps^" + format_double(exponent) + ")";
      case Kind::Ladder: return "ladder";
    }
    return "?";
  }
};

/// Minimum kernel resolution eps/h for any sweep row.
inline constexpr double min_resolution = 4.0;

struct SweepSpec {
  std::vector<double> eps_values;  // empty for the local problem
  HRule h_rule;
  std::vector<SchemeKind> schemes;
  double t_eval = 2.0;
  std::vector<double> p_values{1.0};
};

/// One (eps, h) pair of a sweep; eps = 0 marks the local problem.
struct SweepPoint {
  double eps = 0.0;
  double h = 0.0;
};

/// Expands a sweep into its (eps, h) rows and checks its invariants.
inline std::vector<SweepPoint> expand_sweep(const SweepSpec& spec) {
  if (spec.schemes.empty()) throw std::invalid_argument("sweep: no schemes");
  if (spec.p_values.empty()) throw std::invalid_argument("sweep: no p values");
  for (double p : spec.p_values)
    if (!(p >= 1.0)) throw std::invalid_argument("sweep: p values must be >= 1");
  if (!(spec.t_eval > 0.0)) throw std::invalid_argument("sweep: t_eval must be positive");
  for (std::size_t i = 1; i < spec.eps_values.size(); ++i)
    if (!(spec.eps_values[i] < spec.eps_values[i - 1]))
      throw std::invalid_argument("sweep: eps values must be strictly decreasing");

  const bool nonlocal = !spec.eps_values.empty();
  for (const auto& s : spec.schemes)
    if ((s.problem == Problem::Nonlocal) != nonlocal)
      throw std::invalid_argument("sweep: schemes must all be " + std::string(nonlocal ? "nonlocal" : "local") +
                                  " for this sweep");

  std::vector<SweepPoint> points;
  const auto& rule = spec.h_rule;
  if (rule.kind == HRule::Kind::Ladder) {
    if (rule.ladder.size() < 2) throw std::invalid_argument("sweep: ladder needs at least two h values");
    for (std::size_t i = 1; i < rule.ladder.size(); ++i)
      if (!(rule.ladder[i] < rule.ladder[i - 1]))
        throw std::invalid_argument("sweep: ladder h values must be strictly decreasing");
    if (!nonlocal) {
      for (double h : rule.ladder) points.push_back({0.0, h});
      return points;
    }
    for (double eps : spec.eps_values) {
      std::size_t kept = 0;
      for (double h : rule.ladder) {
        if (rule.ladder_rows != 0 && kept == rule.ladder_rows) break;
        if (eps / h >= min_resolution) {
          points.push_back({eps, h});
          ++kept;
        }
      }
      if (kept < 2)
        throw std::invalid_argument("sweep: fewer than two ladder entries resolve eps = " + format_double(eps));
    }
    return points;
  }

  if (!nonlocal) throw std::invalid_argument("sweep: fixed/coupled rules need eps values");
  for (double eps : spec.eps_values) {
    if (!(eps > 0.0)) throw std::invalid_argument("sweep: eps must be positive");
    const double h = rule.kind == HRule::Kind::Fixed ? rule.c : rule.c * std::pow(eps, rule.exponent);
    if (!(h > 0.0)) throw std::invalid_argument("sweep: h must be positive");
    if (eps / h < min_resolution * (1.0 - 1e-12))
      throw std::invalid_argument("sweep: eps/h = " + format_double(eps / h) + " < 4 at eps = " +
                                  format_double(eps) + ", h = " + format_double(h));
    points.push_back({eps, h});
  }
  return points;
}

/// Smallest domain [k_lo h, k_hi h] containing [lo, hi]; x = 0 is then an
/// exact cell interface.
inline std::pair<double, double> snapped_domain(double lo, double hi, double h) {
  const double k_lo = std::floor(lo / h + 1e-9);
  const double k_hi = std::ceil(hi / h - 1e-9);
  return {k_lo * h, k_hi * h};
}

/// Ghost width for a run: ell + 1 for nonlocal problems, 2 otherwise.
inline std::size_t ghost_width(double eps, double h) {
  if (eps <= 0.0) return 2;
  return static_cast<std::size_t>(std::floor(eps / h)) + 2;
}

/// Everything needed to reproduce one solver run.
struct RunSpec {
  SchemeKind scheme;
  InitialDatumId datum = InitialDatumId::A;
  KernelFamily family = KernelFamily::IsotropicEven;
  double eps = 0.0;  // 0 for local
  double h = 0.0;
  std::pair<double, double> domain{-6.0, 8.0};
  double t_final = 2.0;
  std::vector<double> snapshot_times;
  VelocitySample velocity = VelocitySample::NextCell;
  double blowup_factor = 10.0;
};

inline std::pair<RunConfig, Grid> make_run_config(const RunSpec& spec) {
  const auto [lo, hi] = snapped_domain(spec.domain.first, spec.domain.second, spec.h);
  const Grid grid = build_grid(lo, hi, spec.h, spec.t_final, ghost_width(spec.eps, spec.h));
  RunConfig cfg;
  cfg.scheme = spec.scheme;
  cfg.grid = grid;
  cfg.datum = spec.datum;
  if (spec.scheme.problem == Problem::Nonlocal) {
    if (!(spec.eps > 0.0)) throw std::invalid_argument("nonlocal run needs eps > 0");
    cfg.kernel = make_kernel(spec.family, spec.eps);
  }
  cfg.snapshot_times = spec.snapshot_times;
  cfg.velocity = spec.velocity;
  cfg.blowup_factor = spec.blowup_factor;
  return {cfg, grid};
}

struct RowResult {
  RunSpec spec;
  std::vector<ErrorReport> errors;  // one per p
  double max_right_sup = 0.0;       // over all steps, cells with x_{j-1/2} >= 0
  double final_right_mass = 0.0;
  double max_mass_drift = 0.0;      // max_n |M(t_n) - M(0)|
  double max_abs_value = 0.0;
  double min_value = 0.0;
  std::size_t n_steps = 0;
  std::optional<std::size_t> diverged_at;  // step of the abort; errors are then +inf
  std::string diverged_reason;
  double seconds = 0.0;
  std::vector<StepDiagnostics> diagnostics;  // kept only when requested
  std::vector<Snapshot> snapshots;
  Grid grid;

  double error(double p) const {
    for (const auto& e : errors)
      if (e.p == p) return e.value;
    throw std::out_of_range("RowResult::error: p = " + format_double(p) + " not computed");
  }
};

/// Row standing in for a run aborted by SolverError: errors are +inf.
inline RowResult diverged_row(const RunSpec& spec, const SolverError& e, const std::vector<double>& p_values,
                              ReferenceKind ref_kind) {
  RowResult row;
  row.spec = spec;
  row.grid = make_run_config(spec).second;
  row.diverged_at = e.step();
  row.diverged_reason = e.what();
  row.n_steps = e.step();
  for (double p : p_values) row.errors.push_back({p, std::numeric_limits<double>::infinity(), spec.t_final, ref_kind});
  return row;
}

/// Runs one configuration and condenses its diagnostics.
inline RowResult execute_run(const RunSpec& spec, const std::vector<double>& p_values = {},
                             const ReferenceSampler& reference = {}, ReferenceKind ref_kind = ReferenceKind::ExactLocal,
                             bool keep_diagnostics = false) {
  const auto start = std::chrono::steady_clock::now();
  auto [cfg, grid] = make_run_config(spec);
  RowResult row;
  row.spec = spec;
  row.grid = grid;
  auto traj = run(cfg);
  const double m0 = traj.diagnostics.front().total_mass;
  for (const auto& d : traj.diagnostics) {
    row.max_right_sup = std::max(row.max_right_sup, d.right_sup);
    row.max_mass_drift = std::max(row.max_mass_drift, std::abs(d.total_mass - m0));
  }
  row.final_right_mass = traj.diagnostics.back().right_mass;
  row.min_value = traj.final_field.interior().empty() ? 0.0 : traj.final_field.interior()[0];
  for (double v : traj.final_field.interior()) {
    row.max_abs_value = std::max(row.max_abs_value, std::abs(v));
    row.min_value = std::min(row.min_value, v);
  }
  if (reference)
    for (double p : p_values) row.errors.push_back(lp_error(traj.final_field, grid, reference, p, spec.t_final, ref_kind));
  row.n_steps = traj.n_steps;
  if (keep_diagnostics) row.diagnostics = std::move(traj.diagnostics);
  row.snapshots = std::move(traj.snapshots);
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

/// Runs fn(i) for i in [0, n) on a bounded pool; the first failure (lowest i)
/// is rethrown after all workers finish.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Panels: one convergence study each

struct PanelSpec {
  std::string name;  // e.g. "T3a"
  SweepSpec sweep;
  std::vector<InitialDatumId> data;
  KernelFamily family = KernelFamily::IsotropicEven;
  ReferenceKind reference = ReferenceKind::ExactLocal;
  std::pair<double, double> domain{-6.0, 8.0};
  bool keep_diagnostics = false;
  VelocitySample velocity = VelocitySample::NextCell;
  double blowup_factor = 10.0;
  int fine_factor = 8;  // FineMeshGodunov reference: h_ref = h / fine_factor
};

/// One convergence series: fixed scheme, datum, p and (for mesh sweeps) eps.
struct SeriesTable {
  SchemeKind scheme;
  InitialDatumId datum = InitialDatumId::A;
  double p = 1.0;
  double eps = 0.0;  // fixed eps of a mesh sweep; 0 for eps sweeps and local runs
  ConvergenceTable table;
};

struct PanelResult {
  PanelSpec spec;
  std::vector<RowResult> rows;
  std::vector<SeriesTable> tables;
  double wall_seconds = 0.0;

  const SeriesTable& series(SchemeKind scheme, InitialDatumId datum, double p = 1.0, double eps = 0.0) const {
    for (const auto& s : tables)
      if (s.scheme == scheme && s.datum == datum && s.p == p && s.eps == eps) return s;
    throw std::out_of_range("PanelResult::series: no such series in " + spec.name);
  }
};

inline ReferenceSampler reference_sampler(ReferenceKind kind, InitialDatumId datum) {
  switch (kind) {
    case ReferenceKind::ExactLocal:
      return [datum](double t, double x) { return exact_local(datum, t, x); };
    case ReferenceKind::ExactNonlocalD:
      return [](double t, double x) { return exact_nonlocal_D(t, x); };
    case ReferenceKind::FineMeshGodunov:
      break;
  }
  throw std::invalid_argument("reference_sampler: fine-mesh references are built per mesh");
}

/// Local Godunov solution at h / factor on the same (snapped) domain.
inline FieldSampler fine_mesh_reference(InitialDatumId datum, double h, int factor, std::pair<double, double> domain,
                                        double t_final) {
  const auto [lo, hi] = snapped_domain(domain.first, domain.second, h);
  const double h_ref = h / factor;
  const Grid grid = build_grid(lo, hi, h_ref, t_final, 2);
  RunConfig cfg;
  cfg.scheme = {Method::Godunov, Problem::Local};
  cfg.grid = grid;
  cfg.datum = datum;
  const auto traj = run(cfg);
  return FieldSampler(traj.final_field, grid);
}

inline PanelResult run_panel(const PanelSpec& panel, unsigned workers = 0) {
  const auto start = std::chrono::steady_clock::now();
  const auto points = expand_sweep(panel.sweep);

  struct Job {
    RunSpec spec;
  };
  std::vector<Job> jobs;
  for (const auto& scheme : panel.sweep.schemes)
    for (auto datum : panel.data)
      for (const auto& pt : points) {
        RunSpec rs;
        rs.scheme = scheme;
        rs.datum = datum;
        rs.family = panel.family;
        rs.eps = pt.eps;
        rs.h = pt.h;
        rs.domain = panel.domain;
        rs.t_final = panel.sweep.t_eval;
        rs.velocity = panel.velocity;
        rs.blowup_factor = panel.blowup_factor;
        jobs.push_back({rs});
      }

  // Fine-mesh references, one per distinct (datum, h).
  std::map<std::pair<int, double>, std::optional<FieldSampler>> fine;
  if (panel.reference == ReferenceKind::FineMeshGodunov) {
    for (const auto& j : jobs) fine[{static_cast<int>(j.spec.datum), j.spec.h}];
    std::vector<std::pair<int, double>> keys;
    for (const auto& [k, _] : fine) keys.push_back(k);
    std::vector<std::optional<FieldSampler>> built(keys.size());
    parallel_for(keys.size(), workers, [&](std::size_t i) {
      built[i] = fine_mesh_reference(static_cast<InitialDatumId>(keys[i].first), keys[i].second, panel.fine_factor,
                                     panel.domain, panel.sweep.t_eval);
    });
    for (std::size_t i = 0; i < keys.size(); ++i) fine[keys[i]] = std::move(built[i]);
  }

  PanelResult result;
  result.spec = panel;
  result.rows.resize(jobs.size());
  parallel_for(jobs.size(), workers, [&](std::size_t i) {
    const auto& rs = jobs[i].spec;
    ReferenceSampler ref;
    if (panel.reference == ReferenceKind::FineMeshGodunov) {
      const auto& sampler = *fine.at({static_cast<int>(rs.datum), rs.h});
      ref = [&sampler](double t, double x) { return sampler(t, x); };
    } else {
      ref = reference_sampler(panel.reference, rs.datum);
    }
    try {
      result.rows[i] = execute_run(rs, panel.sweep.p_values, ref, panel.reference, panel.keep_diagnostics);
    } catch (const SolverError& e) {
      result.rows[i] = diverged_row(rs, e, panel.sweep.p_values, panel.reference);
    }
  });

  // Group rows into series, in job order.
  const bool mesh_sweep = panel.sweep.h_rule.kind == HRule::Kind::Ladder;
  for (const auto& scheme : panel.sweep.schemes)
    for (auto datum : panel.data) {
      std::vector<double> group_eps;
      if (mesh_sweep)
        group_eps = panel.sweep.eps_values.empty() ? std::vector<double>{0.0} : panel.sweep.eps_values;
      else
        group_eps = {0.0};
      for (double eps : group_eps)
        for (double p : panel.sweep.p_values) {
          std::vector<ConvergenceRow> rows;
          for (const auto& r : result.rows) {
            if (!(r.spec.scheme == scheme) || r.spec.datum != datum) continue;
            if (mesh_sweep && r.spec.eps != eps) continue;
            rows.push_back({mesh_sweep ? r.spec.h : r.spec.eps, r.error(p)});
          }
          SeriesTable s;
          s.scheme = scheme;
          s.datum = datum;
          s.p = p;
          s.eps = mesh_sweep ? eps : 0.0;
          s.table = make_convergence_table(std::move(rows), mesh_sweep ? ParameterKind::MeshH : ParameterKind::Epsilon);
          result.tables.push_back(std::move(s));
        }
    }
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

// ---------------------------------------------------------------------------
// Default test definitions

struct TestOptions {
  std::optional<Variant> variant;
  bool fine_scale = false;
  std::optional<SweepSpec> overrides;  // replaces the sweep of every selected panel
  std::filesystem::path out_dir;       // empty: nothing written
  unsigned workers = 0;                // 0: hardware concurrency
  bool snapshots = true;
  VelocitySample velocity = VelocitySample::NextCell;  // nonlocal Godunov interface velocity
  double blowup_factor = 10.0;                         // 0 disables the runaway guard
};

/// A snapshot study: fixed (eps, h), several schemes, a few output times.
struct SnapshotSpec {
  std::string name;
  InitialDatumId datum = InitialDatumId::A;
  KernelFamily family = KernelFamily::IsotropicEven;
  double eps = 0.0;
  double h = 0.01;
  std::vector<SchemeKind> schemes;
  std::vector<double> times{0.0, 0.5, 1.0, 1.5, 2.0};
  std::pair<double, double> domain{-6.0, 8.0};
  bool keep_diagnostics = false;
  VelocitySample velocity = VelocitySample::NextCell;
  double blowup_factor = 10.0;
};

struct TestPlan {
  TestId id;
  std::vector<PanelSpec> panels;
  std::optional<SnapshotSpec> snapshots;
};

inline const std::vector<SchemeKind>& nonlocal_schemes() {
  static const std::vector<SchemeKind> s{{Method::LaxFriedrichs, Problem::Nonlocal}, {Method::Godunov, Problem::Nonlocal}};
  return s;
}

inline const std::vector<SchemeKind>& local_schemes() {
  static const std::vector<SchemeKind> s{{Method::LaxFriedrichs, Problem::Local}, {Method::Godunov, Problem::Local}};
  return s;
}

inline const std::vector<SchemeKind>& all_schemes() {
  static const std::vector<SchemeKind> s{{Method::LaxFriedrichs, Problem::Local},
                                         {Method::Godunov, Problem::Local},
                                         {Method::LaxFriedrichs, Problem::Nonlocal},
                                         {Method::Godunov, Problem::Nonlocal}};
  return s;
}

inline const std::vector<double>& fixed_panel_eps() {
  static const std::vector<double> e{0.32, 0.16, 0.08, 0.04, 0.02};
  return e;
}

/// Default panels for a test. Fixed-h panels use h = 0.005 (0.001 at fine scale).
inline TestPlan make_test_plan(TestId id, bool fine_scale = false) {
  const double fixed_h = fine_scale ? 0.001 : 0.005;
  const auto want = [&id](Variant v) { return !id.variant || *id.variant == v; };
  const auto no_variant = [&id](const char* test) {
    if (id.variant) throw std::invalid_argument(std::string(test) + " has no fixed/coupled variants");
  };

  TestPlan plan;
  plan.id = id;
  switch (id.number) {
    case TestNumber::T1: {
      no_variant("T1");
      PanelSpec p;
      p.name = "T1";
      p.data = {InitialDatumId::A, InitialDatumId::B, InitialDatumId::C};
      std::vector<double> hs{0.04, 0.02, 0.01, 0.005};
      if (fine_scale) hs.insert(hs.end(), {0.0025, 0.00125});
      p.sweep = {{}, HRule::mesh_ladder(hs), local_schemes(), 2.0, {1.0}};
      plan.panels.push_back(p);
      break;
    }
    case TestNumber::T2: {
      no_variant("T2");
      PanelSpec p;
      p.name = "T2";
      p.data = {InitialDatumId::D};
      p.family = KernelFamily::RightSupport;
      p.reference = ReferenceKind::ExactNonlocalD;
      p.domain = {-4.0, 4.0};
      p.sweep = {{0.25, 0.05, 0.01},
                 HRule::mesh_ladder({0.02, 0.01, 0.005, 0.0025, 0.00125, 0.000625, 0.0003125}, 4),
                 nonlocal_schemes(),
                 1.0,
                 {1.0}};
      plan.panels.push_back(p);
      break;
    }
    case TestNumber::T3: {
      if (want(Variant::FixedH)) {
        PanelSpec p;
        p.name = "T3a";
        p.data = {InitialDatumId::A};
        p.sweep = {fixed_panel_eps(), HRule::fixed(fixed_h), nonlocal_schemes(), 2.0, {1.0}};
        plan.panels.push_back(p);
      }
      if (want(Variant::CoupledH)) {
        PanelSpec p;
        p.name = "T3b";
        p.data = {InitialDatumId::A};
        p.sweep = {{0.010, 0.009, 0.008, 0.007, 0.006}, HRule::coupled(25.0, 2.0), nonlocal_schemes(), 2.0, {1.0}};
        plan.panels.push_back(p);
      }
      plan.snapshots = SnapshotSpec{"T3", InitialDatumId::A, KernelFamily::IsotropicEven, 0.25, 0.01, all_schemes()};
      break;
    }
    case TestNumber::T4: {
      if (id.variant && *id.variant != Variant::CoupledH)
        throw std::invalid_argument("T4 only has the coupled variant");
      PanelSpec p;
      p.name = "T4";
      p.data = {InitialDatumId::B};
      p.family = KernelFamily::LeftSupport;
      p.keep_diagnostics = true;
      p.sweep = {{0.4, 0.2, 0.1, 0.05, 0.025}, HRule::coupled(std::sqrt(1.0 / 1000.0), 0.5), nonlocal_schemes(), 2.0,
                 {1.0}};
      plan.panels.push_back(p);
      plan.snapshots = SnapshotSpec{"T4", InitialDatumId::B, KernelFamily::LeftSupport, 0.1, 0.01, all_schemes()};
      plan.snapshots->keep_diagnostics = true;
      break;
    }
    case TestNumber::T5: {
      no_variant("T5");
      plan.snapshots = SnapshotSpec{"T5", InitialDatumId::F, KernelFamily::LeftSupport, 0.25, 0.01, all_schemes()};
      plan.snapshots->keep_diagnostics = true;
      break;
    }
    case TestNumber::T6: {
      if (want(Variant::FixedH)) {
        PanelSpec p;
        p.name = "T6a";
        p.data = {InitialDatumId::C};
        p.domain = {-5.0, 5.0};
        p.sweep = {fixed_panel_eps(), HRule::fixed(fixed_h), nonlocal_schemes(), 2.0, {1.0, 2.0, 4.0}};
        plan.panels.push_back(p);
      }
      if (want(Variant::CoupledH)) {
        PanelSpec p;
        p.name = "T6b";
        p.data = {InitialDatumId::C};
        p.domain = {-5.0, 5.0};
        p.sweep = {{0.0039, 0.0035, 0.0031, 0.0027, 0.0023}, HRule::coupled(64.0, 2.0), nonlocal_schemes(), 2.0,
                   {1.0, 2.0, 4.0}};
        plan.panels.push_back(p);
      }
      plan.snapshots = SnapshotSpec{"T6", InitialDatumId::C, KernelFamily::IsotropicEven, 0.2, 0.01, all_schemes()};
      plan.snapshots->domain = {-5.0, 5.0};
      break;
    }
    case TestNumber::T7: {
      if (want(Variant::FixedH)) {
        PanelSpec p;
        p.name = "T7a";
        p.data = {InitialDatumId::E};
        p.reference = ReferenceKind::FineMeshGodunov;
        p.domain = {-6.0, 10.0};
        p.sweep = {fixed_panel_eps(), HRule::fixed(fixed_h), nonlocal_schemes(), 2.0, {1.0}};
        plan.panels.push_back(p);
      }
      if (want(Variant::CoupledH)) {
        PanelSpec p;
        p.name = "T7b";
        p.data = {InitialDatumId::E};
        p.reference = ReferenceKind::FineMeshGodunov;
        p.domain = {-6.0, 10.0};
        p.sweep = {fixed_panel_eps(), HRule::coupled(0.1, 1.0), nonlocal_schemes(), 2.0, {1.0}};
        plan.panels.push_back(p);
      }
      break;
    }
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Running a test and writing its files

struct SnapshotResult {
  SnapshotSpec spec;
  std::vector<RowResult> runs;  // one per scheme, in spec order
};

struct TestResult {
  TestId id;
  std::vector<PanelResult> panels;
  std::optional<SnapshotResult> snapshots;
  std::vector<std::filesystem::path> files;
  double wall_seconds = 0.0;

  bool any_diverged() const {
    for (const auto& p : panels)
      for (const auto& r : p.rows)
        if (r.diverged_at) return true;
    if (snapshots)
      for (const auto& r : snapshots->runs)
        if (r.diverged_at) return true;
    return false;
  }

  const PanelResult& panel(std::string_view name) const {
    for (const auto& p : panels)
      if (p.spec.name == name) return p;
    throw std::out_of_range("TestResult::panel: no panel " + std::string(name));
  }
};

inline SnapshotResult run_snapshots(const SnapshotSpec& spec, unsigned workers = 0) {
  SnapshotResult res;
  res.spec = spec;
  res.runs.resize(spec.schemes.size());
  parallel_for(spec.schemes.size(), workers, [&](std::size_t i) {
    RunSpec rs;
    rs.scheme = spec.schemes[i];
    rs.datum = spec.datum;
    rs.family = spec.family;
    rs.eps = spec.schemes[i].problem == Problem::Nonlocal ? spec.eps : 0.0;
    rs.h = spec.h;
    rs.domain = spec.domain;
    rs.t_final = spec.times.empty() ? 0.0 : *std::max_element(spec.times.begin(), spec.times.end());
    rs.snapshot_times = spec.times;
    rs.velocity = spec.velocity;
    rs.blowup_factor = spec.blowup_factor;
    try {
      res.runs[i] = execute_run(rs, {}, {}, ReferenceKind::ExactLocal, spec.keep_diagnostics);
    } catch (const SolverError& e) {
      res.runs[i] = diverged_row(rs, e, {}, ReferenceKind::ExactLocal);
    }
  });
  return res;
}

namespace detail {

inline std::string series_file_stem(const std::string& panel, SchemeKind s, double p) {
  return panel + "_" + to_string(s) + "_p" + format_double(p);
}

inline nlohmann::json sweep_json(const SweepSpec& s) {
  nlohmann::json j;
  j["eps_list"] = s.eps_values;
  j["h_rule"] = {{"kind", s.h_rule.describe()}, {"c", s.h_rule.c}, {"exponent", s.h_rule.exponent},
                 {"ladder", s.h_rule.ladder}, {"ladder_rows", s.h_rule.ladder_rows}};
  std::vector<std::string> schemes;
  for (const auto& k : s.schemes) schemes.push_back(to_string(k));
  j["schemes"] = schemes;
  j["t_final"] = s.t_eval;
  j["p_values"] = s.p_values;
  return j;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << '\n';
}

inline void write_panel_files(const PanelResult& panel, const std::filesystem::path& dir,
                              std::vector<std::filesystem::path>& files) {
  // One ConvergenceTable CSV per (scheme, p), all data and eps in it.
  for (const auto& scheme : panel.spec.sweep.schemes)
    for (double p : panel.spec.sweep.p_values) {
      const auto path = dir / (series_file_stem(panel.spec.name, scheme, p) + ".csv");
      std::ofstream out(path);
      if (!out) throw std::runtime_error("cannot open " + path.string());
      out << "eps,h,p,error,scheme,datum,t_eval\r\n";
      for (const auto& r : panel.rows) {
        if (!(r.spec.scheme == scheme)) continue;
        out << format_double(r.spec.eps) << ',' << format_double(r.spec.h) << ',' << format_double(p) << ','
            << format_double(r.error(p)) << ',' << to_string(scheme) << ',' << to_string(r.spec.datum) << ','
            << format_double(r.spec.t_final) << "\r\n";
      }
      files.push_back(path);
    }
  if (panel.spec.keep_diagnostics)
    for (const auto& r : panel.rows) {
      const auto path = dir / (panel.spec.name + "_diag_" + to_string(r.spec.scheme) + "_eps" +
                               format_double(r.spec.eps) + "_h" + format_double(r.spec.h) + ".csv");
      write_diagnostics_csv(path, r.diagnostics);
      files.push_back(path);
    }
}

inline nlohmann::json panel_manifest(const PanelResult& panel) {
  nlohmann::json j = sweep_json(panel.spec.sweep);
  j["panel"] = panel.spec.name;
  std::vector<std::string> data;
  for (auto d : panel.spec.data) data.emplace_back(to_string(d));
  j["datum"] = data;
  j["kernel_family"] = panel.spec.sweep.eps_values.empty() ? "none" : std::string(to_string(panel.spec.family));
  j["reference"] = std::string(to_string(panel.spec.reference));
  if (panel.spec.reference == ReferenceKind::FineMeshGodunov) j["reference_h_factor"] = 1.0 / panel.spec.fine_factor;
  j["domain"] = {panel.spec.domain.first, panel.spec.domain.second};
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : panel.rows)
    rows.push_back({{"scheme", to_string(r.spec.scheme)},
                    {"datum", std::string(to_string(r.spec.datum))},
                    {"eps", r.spec.eps},
                    {"h", r.spec.h},
                    {"domain", {r.grid.x_lo, r.grid.x_hi}},
                    {"n_cells", r.grid.n_cells},
                    {"n_ghost", r.grid.n_ghost},
                    {"n_steps", r.n_steps},
                    {"diverged_at_step", r.diverged_at ? nlohmann::json(*r.diverged_at) : nlohmann::json(nullptr)},
                    {"diverged_reason", r.diverged_reason},
                    {"seconds", r.seconds}});
  j["rows"] = rows;
  j["timings"] = {{"wall_seconds", panel.wall_seconds}};
  return j;
}

}  // namespace detail

/** Runs the default (or overridden) panels of a test, writes one CSV per
 *  (panel, scheme, p), the snapshot CSVs and a JSON manifest into
 *  options.out_dir when it is set.
 */
inline TestResult run_test(TestId id, const TestOptions& options = {}) {
  const auto start = std::chrono::steady_clock::now();
  if (options.variant) id.variant = options.variant;
  TestPlan plan = make_test_plan(id, options.fine_scale);
  if (options.overrides) {
    if (plan.panels.empty()) throw std::invalid_argument(to_string(id.number) + " has no sweep to override");
    for (auto& p : plan.panels) p.sweep = *options.overrides;
  }
  for (auto& p : plan.panels) {
    p.velocity = options.velocity;
    p.blowup_factor = options.blowup_factor;
  }
  if (plan.snapshots) {
    plan.snapshots->velocity = options.velocity;
    plan.snapshots->blowup_factor = options.blowup_factor;
  }
  // Validate every sweep before any work starts.
  for (const auto& p : plan.panels) expand_sweep(p.sweep);

  const bool write = !options.out_dir.empty();
  if (write) std::filesystem::create_directories(options.out_dir);

  TestResult result;
  result.id = id;
  nlohmann::json manifest;
  manifest["test"] = to_string(id.number);
  manifest["variant"] = id.variant ? std::string(to_string(*id.variant)) : "all";
  manifest["fine_scale"] = options.fine_scale;
  manifest["cfl_ratio"] = default_cfl_ratio;
  manifest["boundary"] = "constant_extrapolation";
  manifest["velocity_sample"] = std::string(to_string(options.velocity));
  manifest["blowup_factor"] = options.blowup_factor;
  manifest["git_describe"] = NLB_GIT_DESCRIBE;
  manifest["min_eps_over_h"] = min_resolution;
  const auto manifest_path = options.out_dir / (to_string(id.number) + "_manifest.json");

  try {
    for (const auto& spec : plan.panels) {
      result.panels.push_back(run_panel(spec, options.workers));
      if (write) detail::write_panel_files(result.panels.back(), options.out_dir, result.files);
      manifest["panels"].push_back(detail::panel_manifest(result.panels.back()));
    }
    if (plan.snapshots && options.snapshots) {
      result.snapshots = run_snapshots(*plan.snapshots, options.workers);
      const auto& snap = *result.snapshots;
      nlohmann::json sj;
      sj["datum"] = std::string(to_string(snap.spec.datum));
      sj["kernel_family"] = std::string(to_string(snap.spec.family));
      sj["eps"] = snap.spec.eps;
      sj["h"] = snap.spec.h;
      sj["times"] = snap.spec.times;
      sj["domain"] = {snap.spec.domain.first, snap.spec.domain.second};
      for (const auto& r : snap.runs)
        sj["runs"].push_back({{"scheme", to_string(r.spec.scheme)},
                              {"n_steps", r.n_steps},
                              {"max_right_sup", r.max_right_sup},
                              {"final_right_mass", r.final_right_mass},
                              {"diverged_at_step", r.diverged_at ? nlohmann::json(*r.diverged_at) : nlohmann::json(nullptr)},
                              {"diverged_reason", r.diverged_reason}});
      if (write) {
        for (const auto& r : snap.runs) {
          for (const auto& s : r.snapshots) {
            const auto path = options.out_dir / (snap.spec.name + "_snap_" + to_string(r.spec.scheme) + "_t" +
                                                 format_double(s.requested) + ".csv");
            write_snapshot_csv(path, s.field, r.grid);
            result.files.push_back(path);
            sj["files"].push_back({{"file", path.filename().string()},
                                   {"scheme", to_string(r.spec.scheme)},
                                   {"requested_time", s.requested},
                                   {"time", s.time},
                                   {"step", s.step}});
          }
          if (snap.spec.keep_diagnostics) {
            const auto path = options.out_dir / (snap.spec.name + "_snapdiag_" + to_string(r.spec.scheme) + ".csv");
            write_diagnostics_csv(path, r.diagnostics);
            result.files.push_back(path);
          }
        }
        if (has_exact_local(snap.spec.datum)) {
          const auto& grid = snap.runs.front().grid;
          for (double t : snap.spec.times) {
            CellField exact(grid, t);
            for (std::size_t j = 0; j < grid.n_cells; ++j) {
              const auto jj = static_cast<std::ptrdiff_t>(j);
              exact[jj] = exact_local(snap.spec.datum, t, grid.center(jj));
            }
            const auto path = options.out_dir / (snap.spec.name + "_snap_exact_t" + format_double(t) + ".csv");
            write_snapshot_csv(path, exact, grid);
            result.files.push_back(path);
          }
        }
      }
      manifest["snapshots"] = sj;
    }
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    if (write) detail::write_json(manifest_path, manifest);
    throw;
  }

  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  manifest["status"] = result.any_diverged() ? "diverged" : "ok";
  manifest["timings"] = {{"wall_seconds", result.wall_seconds}};
  if (write) {
    detail::write_json(manifest_path, manifest);
    result.files.push_back(manifest_path);
  }
  return result;
}

}  // namespace nlb
