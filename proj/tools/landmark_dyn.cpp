#include <cstdio>
#include <exception>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "landmark/experiment.hpp"
#include "landmark/version.hpp"

namespace {

using namespace landmark;

Eigen::VectorXd parse_vec(const std::string& s) {
  std::vector<double> vals;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(std::stod(tok));
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = vals[i];
  return v;
}

// The hash recorded in reports covers a canonical rendering of the
// effective parameters, so CLI runs are stamped like config-file runs.
std::string canonical_args(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += p + "\n";
  return out;
}

int run_and_print(const cli::ExperimentConfig& cfg, bool print_json) {
  const auto rr = cli::run(cfg);
  if (print_json) {
    std::cout << rr.report.dump(2) << "\n";
  } else {
    for (const auto& [key, val] : rr.report.items())
      std::cout << key << ": " << val.dump() << "\n";
  }
  for (const auto& a : rr.artifacts) std::cerr << "wrote " << a << "\n";
  return rr.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "landmark-dyn: geodesic and stochastic dynamics on landmark spaces "
      "with radial cometric kernels"};
  app.set_version_flag("--version", landmark::version_string);
  app.require_subcommand(1);

  std::string kernel_arg = "laplacian";
  std::string out_dir = ".";
  bool json_out = false;

  // classify
  auto* classify = app.add_subcommand(
      "classify", "Classify geodesic completeness of a kernel");
  double a = 1.0;
  classify->add_option("--kernel", kernel_arg,
                       "Kernel spec: builtin name or { variant = ..., ... }")
      ->required();
  classify->add_option("--a", a, "Upper integration limit (verdict is a-independent)");
  classify->add_flag("--json", json_out, "Print the JSON report to stdout");

  // shoot
  auto* shoot = app.add_subcommand(
      "shoot", "Integrate Hamiltonian geodesic shooting for n landmarks");
  std::string init_file, traj_out = "traj.csv";
  double t_end = 10.0;
  shoot->add_option("--kernel", kernel_arg, "Kernel spec")->required();
  shoot->add_option("--init", init_file,
                    "Initial data JSON file {n, d, x, p}")
      ->required();
  shoot->add_option("--t-end", t_end, "Integration horizon")->required();
  shoot->add_option("--out", traj_out, "Trajectory CSV path");

  // twobody
  auto* twob = app.add_subcommand(
      "twobody", "Two-landmark reduced system: forecast or simulate");
  std::string u_arg, q_arg, p_arg;
  bool do_forecast = false, do_simulate = false;
  double tb_t_end = 10.0;
  twob->add_option("--kernel", kernel_arg, "Kernel spec")->required();
  twob->add_option("--u", u_arg, "Relative position x1-x2, comma-separated")
      ->required();
  twob->add_option("--Q", q_arg, "Relative momentum (p1-p2)/2")->required();
  twob->add_option("--P", p_arg, "Total momentum p1+p2")->required();
  twob->add_flag("--forecast", do_forecast,
                 "Breakdown forecast from the conserved pair (D, omega)");
  twob->add_flag("--simulate", do_simulate, "Integrate the reduced system");
  twob->add_option("--t-end", tb_t_end, "Horizon for --simulate");
  twob->add_option("--out", out_dir, "Output directory for --simulate");

  // sde
  auto* sde = app.add_subcommand(
      "sde", "Radial two-landmark SDE: Monte-Carlo hitting estimate");
  int d = 2;
  double r0 = 0.1, dt = 1e-4, horizon = 5.0;
  long paths = 10000;
  std::uint64_t seed = 42;
  bool with_ce = false;
  sde->add_option("--kernel", kernel_arg, "Kernel spec")->required();
  sde->add_option("--d", d, "Ambient dimension (d = 2 is the validated regime)");
  sde->add_option("--r0", r0, "Initial separation");
  sde->add_option("--dt", dt, "Euler-Maruyama step");
  sde->add_option("--horizon", horizon, "Time horizon");
  sde->add_option("--paths", paths, "Number of paths");
  sde->add_option("--seed", seed, "RNG seed (per-path streams derive from it)");
  sde->add_flag("--ce", with_ce, "Also run the Cherny-Engelbert checker");

  // length
  auto* length = app.add_subcommand(
      "length", "Riemannian length and collision/escape lower bounds");
  std::string curve_file;
  std::vector<int> pair_arg;
  int escape_arg = -1;
  length->add_option("--kernel", kernel_arg, "Kernel spec")->required();
  length->add_option("--curve", curve_file, "Curve CSV (t, x_i_k columns)")
      ->required();
  length->add_option("--pair", pair_arg, "Landmark pair i j for the collision bound")
      ->expected(2);
  length->add_option("--escape", escape_arg, "Landmark index for the escape bound");

  // figure1
  auto* fig = app.add_subcommand(
      "figure1", "Emit SVG/CSV samples of the two reference kernels on [0, 4]");
  fig->add_option("--out", out_dir, "Output directory");
  bool fig_csv = false;
  fig->add_flag("--csv", fig_csv, "Also write figure1.csv samples");

  // repro-collision
  auto* repro = app.add_subcommand(
      "repro-collision",
      "Reproduce the closed-form Laplacian head-on collision (b=1, T=1)");
  repro->add_option("--out", out_dir, "Output directory");

  // run
  auto* runc = app.add_subcommand("run", "Run an experiment config file");
  std::string config_path;
  runc->add_option("config", config_path, "Config file path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    using cli::Command;
    cli::ExperimentConfig cfg;

    if (classify->parsed()) {
      cfg.command = Command::classify;
      cfg.kernel = config::parse_kernel_arg(kernel_arg);
      cfg.a = a;
      cfg.output.formats = {};  // stdout only
      cfg.config_hash_source =
          canonical_args({"classify", kernel_arg, std::to_string(a)});
      // stdout carries the report; no files unless run via a config
      const auto rr = cli::run(cfg);
      if (json_out)
        std::cout << rr.report.dump(2) << "\n";
      else
        std::cout << "geodesic: " << rr.report["geodesic"].get<std::string>()
                  << " (a = " << a << ")\n";
      return rr.exit_code;
    }

    if (shoot->parsed()) {
      cfg.command = Command::shoot;
      cfg.kernel = config::parse_kernel_arg(kernel_arg);
      cfg.init_file = init_file;
      cfg.t_end = t_end;
      cfg.out_file = traj_out;
      cfg.output.formats = {"csv"};
      cfg.config_hash_source = canonical_args(
          {"shoot", kernel_arg, init_file, std::to_string(t_end)});
      return run_and_print(cfg, true);
    }

    if (twob->parsed()) {
      if (do_forecast == do_simulate)
        throw CLI::ValidationError(
            "twobody: pass exactly one of --forecast / --simulate");
      cfg.command = Command::twobody;
      cfg.kernel = config::parse_kernel_arg(kernel_arg);
      cfg.u = parse_vec(u_arg);
      cfg.Q = parse_vec(q_arg);
      cfg.P = parse_vec(p_arg);
      cfg.forecast = do_forecast;
      cfg.t_end = tb_t_end;
      cfg.output.dir = out_dir;
      cfg.output.formats = do_simulate
                               ? std::set<std::string>{"csv", "json"}
                               : std::set<std::string>{};
      cfg.config_hash_source = canonical_args(
          {"twobody", kernel_arg, u_arg, q_arg, p_arg,
           do_forecast ? "forecast" : "simulate", std::to_string(tb_t_end)});
      return run_and_print(cfg, true);
    }

    if (sde->parsed()) {
      cfg.command = Command::sde;
      cfg.kernel = config::parse_kernel_arg(kernel_arg);
      cfg.d = d;
      cfg.r0 = r0;
      cfg.dt = dt;
      cfg.horizon = horizon;
      cfg.paths = paths;
      cfg.seed = seed;
      cfg.with_ce = with_ce;
      cfg.output.formats = {};
      cfg.config_hash_source = canonical_args(
          {"sde", kernel_arg, std::to_string(d), std::to_string(r0),
           std::to_string(dt), std::to_string(horizon), std::to_string(paths),
           std::to_string(seed), with_ce ? "ce" : ""});
      return run_and_print(cfg, true);
    }

    if (length->parsed()) {
      cfg.command = Command::length;
      cfg.kernel = config::parse_kernel_arg(kernel_arg);
      cfg.curve_file = curve_file;
      if (!pair_arg.empty()) cfg.pair = {pair_arg[0], pair_arg[1]};
      if (escape_arg >= 0) cfg.escape = escape_arg;
      cfg.output.formats = {};
      cfg.config_hash_source =
          canonical_args({"length", kernel_arg, curve_file});
      return run_and_print(cfg, true);
    }

    if (fig->parsed()) {
      cfg.command = Command::figure1;
      cfg.output.dir = out_dir;
      cfg.output.formats = fig_csv ? std::set<std::string>{"svg", "csv"}
                                   : std::set<std::string>{"svg"};
      cfg.config_hash_source = canonical_args({"figure1"});
      return run_and_print(cfg, false);
    }

    if (repro->parsed()) {
      cfg.command = Command::repro_collision;
      cfg.output.dir = out_dir;
      cfg.output.formats = {"csv", "json"};
      cfg.config_hash_source = canonical_args({"repro-collision"});
      return run_and_print(cfg, true);
    }

    if (runc->parsed()) {
      const auto file_cfg = cli::parse_experiment_file(config_path);
      return run_and_print(file_cfg, true);
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
