// Command-line driver: single solver runs (`solve`) and the benchmark
// studies T1..T7 (`test`).

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlburgers/nlburgers.hpp"

namespace {

std::vector<double> parse_list(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument(std::string("bad number '") + item + "' in " + what);
    }
  }
  return out;
}

struct SolveArgs {
  std::string problem = "local";
  std::string scheme = "godunov";
  std::string datum = "A";
  std::string kernel;
  double eps = 0.0;
  double h = 0.01;
  double tfinal = 2.0;
  std::string snapshots;
  std::string domain = "-6,8";
  std::string out = ".";
  std::string velocity = "next-cell";
  double blowup = 10.0;
};

int run_solve(const SolveArgs& a) {
  nlb::RunSpec spec;
  spec.scheme = {nlb::parse_method(a.scheme), nlb::parse_problem(a.problem)};
  spec.datum = nlb::parse_datum(a.datum);
  if (spec.scheme.problem == nlb::Problem::Local) {
    if (!a.kernel.empty() || a.eps != 0.0) throw std::invalid_argument("--kernel/--eps are not allowed with --problem local");
  } else {
    if (a.kernel.empty() || !(a.eps > 0.0)) throw std::invalid_argument("--problem nonlocal needs --kernel and --eps > 0");
    spec.family = nlb::parse_kernel_family(a.kernel);
    spec.eps = a.eps;
    if (a.eps / a.h < nlb::min_resolution)
      std::cerr << "warning: eps/h = " << a.eps / a.h << " < " << nlb::min_resolution
                << "; the discrete kernel is poorly resolved\n";
  }
  spec.velocity = nlb::parse_velocity_sample(a.velocity);
  spec.blowup_factor = a.blowup;
  spec.h = a.h;
  spec.t_final = a.tfinal;
  const auto dom = parse_list(a.domain, "--domain");
  if (dom.size() != 2) throw std::invalid_argument("--domain takes lo,hi");
  spec.domain = {dom[0], dom[1]};
  spec.snapshot_times = a.snapshots.empty() ? std::vector<double>{0.0, a.tfinal} : parse_list(a.snapshots, "--snapshots");

  const std::filesystem::path out(a.out);
  std::filesystem::create_directories(out);
  const auto start = std::chrono::steady_clock::now();
  const auto row = nlb::execute_run(spec, {}, {}, nlb::ReferenceKind::ExactLocal, false);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  nlohmann::json manifest;
  manifest["command"] = "solve";
  manifest["scheme"] = nlb::to_string(spec.scheme);
  manifest["datum"] = std::string(nlb::to_string(spec.datum));
  manifest["kernel_family"] = spec.scheme.problem == nlb::Problem::Nonlocal ? std::string(nlb::to_string(spec.family)) : "none";
  manifest["eps_list"] = spec.scheme.problem == nlb::Problem::Nonlocal ? std::vector<double>{spec.eps} : std::vector<double>{};
  manifest["h_rule"] = "fixed(h=" + nlb::format_double(spec.h) + ")";
  manifest["h"] = spec.h;
  manifest["cfl_ratio"] = nlb::default_cfl_ratio;
  manifest["domain"] = {row.grid.x_lo, row.grid.x_hi};
  manifest["n_cells"] = row.grid.n_cells;
  manifest["n_steps"] = row.n_steps;
  manifest["t_final"] = spec.t_final;
  manifest["p_values"] = nlohmann::json::array();
  manifest["reference"] = "none";
  manifest["velocity_sample"] = std::string(nlb::to_string(spec.velocity));
  manifest["blowup_factor"] = spec.blowup_factor;
  manifest["git_describe"] = NLB_GIT_DESCRIBE;
  manifest["timings"] = {{"wall_seconds", seconds}};
  for (const auto& s : row.snapshots) {
    const auto name = "snapshot_t" + nlb::format_double(s.requested) + ".csv";
    nlb::write_snapshot_csv(out / name, s.field, row.grid);
    manifest["snapshots"].push_back({{"file", name}, {"requested_time", s.requested}, {"time", s.time}, {"step", s.step}});
  }
  std::ofstream(out / "manifest.json") << manifest.dump(2) << '\n';
  std::cout << "wrote " << row.snapshots.size() << " snapshots to " << out << " (" << row.n_steps << " steps, "
            << seconds << " s)\n";
  return 0;
}

int run_test_command(const std::string& name, const std::string& variant, const std::string& out, bool fine_scale,
                     unsigned workers, const std::string& velocity, double blowup) {
  nlb::TestId id{nlb::parse_test_number(name), std::nullopt};
  nlb::TestOptions opts;
  if (!variant.empty()) opts.variant = nlb::parse_variant(variant);
  opts.fine_scale = fine_scale;
  opts.out_dir = out;
  opts.workers = workers;
  opts.velocity = nlb::parse_velocity_sample(velocity);
  opts.blowup_factor = blowup;
  const auto result = nlb::run_test(id, opts);

  for (const auto& panel : result.panels) {
    std::cout << panel.spec.name << " (" << panel.wall_seconds << " s)\n";
    for (const auto& s : panel.tables) {
      std::cout << "  " << nlb::to_string(s.scheme) << " datum " << nlb::to_string(s.datum) << " p=" << s.p;
      if (s.eps > 0.0) std::cout << " eps=" << s.eps;
      std::cout << "  rate " << s.table.fitted_rate << "\n";
      for (const auto& r : s.table.rows)
        std::cout << "    " << (s.table.parameter_kind == nlb::ParameterKind::MeshH ? "h=" : "eps=") << r.parameter
                  << "  error=" << r.error << "\n";
    }
    for (const auto& r : panel.rows)
      if (r.diverged_at)
        std::cout << "  diverged: " << nlb::to_string(r.spec.scheme) << " datum " << nlb::to_string(r.spec.datum)
                  << " eps=" << r.spec.eps << " h=" << r.spec.h << ": " << r.diverged_reason << "\n";
  }
  if (result.snapshots)
    for (const auto& r : result.snapshots->runs)
      if (r.diverged_at)
        std::cout << result.snapshots->spec.name << " snapshots " << nlb::to_string(r.spec.scheme) << ": "
                  << r.diverged_reason << "\n";
      else
        std::cout << result.snapshots->spec.name << " snapshots " << nlb::to_string(r.spec.scheme)
                << ": max right-support value " << r.max_right_sup << ", final right mass " << r.final_right_mass
                << "\n";
  std::cout << "wrote " << result.files.size() << " files to " << out << "\n";
  if (result.any_diverged()) {
    std::cerr << "some runs aborted; see the manifest\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-volume solver for the local and nonlocal Burgers equations"};
  app.require_subcommand(1);

  SolveArgs s;
  auto* solve = app.add_subcommand("solve", "Run one scheme on one initial datum");
  solve->set_help_flag("--help", "Print this help message and exit");
  solve->add_option("--problem", s.problem, "local|nonlocal")->check(CLI::IsMember({"local", "nonlocal"}));
  solve->add_option("--scheme", s.scheme, "lf|godunov")->check(CLI::IsMember({"lf", "godunov"}));
  solve->add_option("--datum", s.datum, "A..F")->check(CLI::IsMember({"A", "B", "C", "D", "E", "F"}));
  solve->add_option("--kernel", s.kernel, "even|left|right")->check(CLI::IsMember({"even", "left", "right"}));
  solve->add_option("--eps", s.eps, "Kernel radius");
  solve->add_option("--h", s.h, "Cell width")->check(CLI::PositiveNumber);
  solve->add_option("--tfinal", s.tfinal, "Final time")->check(CLI::NonNegativeNumber);
  solve->add_option("--snapshots", s.snapshots, "Comma-separated output times (default 0,tfinal)");
  solve->add_option("--domain", s.domain, "lo,hi (widened to whole cells)");
  solve->add_option("--out", s.out, "Output directory");
  solve->add_option("--velocity", s.velocity, "Nonlocal Godunov interface velocity: next-cell|interface")
      ->check(CLI::IsMember({"next-cell", "interface"}));
  solve->add_option("--blowup-factor", s.blowup, "Abort when max|rho| exceeds this times the initial maximum (0 = off)")
      ->check(CLI::NonNegativeNumber);

  std::string test_name, variant, test_out = ".";
  bool fine_scale = false;
  unsigned workers = 0;
  std::string test_velocity = "next-cell";
  double test_blowup = 10.0;
  auto* test = app.add_subcommand("test", "Run a benchmark study T1..T7");
  test->add_option("test", test_name, "T1..T7")->required();
  test->add_option("--variant", variant, "fixed|coupled")->check(CLI::IsMember({"fixed", "coupled"}));
  test->add_option("--out", test_out, "Output directory");
  test->add_flag("--fine-scale", fine_scale, "Use h = 0.001 for the fixed-h panels");
  test->add_option("--workers", workers, "Worker threads (0 = all cores)");
  test->add_option("--velocity", test_velocity, "Nonlocal Godunov interface velocity: next-cell|interface")
      ->check(CLI::IsMember({"next-cell", "interface"}));
  test->add_option("--blowup-factor", test_blowup, "Abort a run when max|rho| exceeds this times the initial maximum (0 = off)")
      ->check(CLI::NonNegativeNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*solve) return run_solve(s);
    return run_test_command(test_name, variant, test_out, fine_scale, workers, test_velocity, test_blowup);
  } catch (const nlb::SolverError& e) {
    std::cerr << "solver aborted at step " << e.step() << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
