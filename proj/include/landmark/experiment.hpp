#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "landmark/completeness.hpp"
#include "landmark/config.hpp"
#include "landmark/dynamics.hpp"
#include "landmark/geometry.hpp"
#include "landmark/io.hpp"
#include "landmark/kernels.hpp"
#include "landmark/stochastic.hpp"
#include "landmark/twobody.hpp"
#include "landmark/version.hpp"

namespace landmark::cli {

using json = nlohmann::json;

enum class Command {
  classify,
  shoot,
  twobody,
  sde,
  length,
  figure1,
  repro_collision,
};

struct OutputSpec {
  std::string dir = ".";
  std::set<std::string> formats;  // subset of {csv, json, svg}
};

// One reproducible experiment: kernel, command, command parameters, output
// destinations and the seed. Built either from CLI flags or from a strict
// config file (unknown keys rejected).
struct ExperimentConfig {
  kernels::KernelSpec kernel;
  Command command = Command::classify;
  OutputSpec output;
  std::uint64_t seed = 42;

  // classify
  double a = 1.0;
  // shoot / twobody simulate
  double t_end = 10.0;
  std::string init_file;
  std::optional<dynamics::PhasePoint> init_inline;
  std::string out_file;  // trajectory csv override
  // twobody
  Eigen::VectorXd u, Q, P;
  bool forecast = true;
  // sde
  int d = 2;
  double r0 = 0.1;
  double dt = 1e-4;
  double horizon = 5.0;
  long paths = 10000;
  bool with_ce = false;
  // length
  std::string curve_file;
  std::optional<std::pair<int, int>> pair;
  std::optional<int> escape;

  std::string config_hash_source;  // canonical text the hash is taken over
};

namespace detail {

inline Eigen::VectorXd vec_from_array(const config::Array& arr,
                                      const std::string& key) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = arr[i].number(key);
  return v;
}

inline Eigen::MatrixXd mat_from_array(const config::Array& rows,
                                      const std::string& key) {
  if (rows.empty()) throw config::ConfigError("key '" + key + "': empty matrix");
  const std::size_t d = rows.front().array(key).size();
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i].array(key);
    if (row.size() != d)
      throw config::ConfigError("key '" + key + "': ragged matrix");
    for (std::size_t k = 0; k < d; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          row[k].number(key);
  }
  return m;
}

inline dynamics::PhasePoint init_from_json(const json& j) {
  dynamics::PhasePoint s;
  const int n = j.at("n").get<int>();
  const int d = j.at("d").get<int>();
  s.x.resize(n, d);
  s.p.resize(n, d);
  const auto& jx = j.at("x");
  const auto& jp = j.at("p");
  if (static_cast<int>(jx.size()) != n || static_cast<int>(jp.size()) != n)
    throw std::runtime_error("init file: x/p row count != n");
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(jx[i].size()) != d ||
        static_cast<int>(jp[i].size()) != d)
      throw std::runtime_error("init file: row width != d");
    for (int k = 0; k < d; ++k) {
      s.x(i, k) = jx[i][k].get<double>();
      s.p(i, k) = jp[i][k].get<double>();
    }
  }
  return s;
}

inline dynamics::PhasePoint load_init(const ExperimentConfig& cfg) {
  if (cfg.init_inline) return *cfg.init_inline;
  std::ifstream in(cfg.init_file);
  if (!in) throw std::runtime_error("cannot open init file " + cfg.init_file);
  json j;
  in >> j;
  return init_from_json(j);
}

inline std::string geodesic_str(completeness::Geodesic g) {
  switch (g) {
    case completeness::Geodesic::complete:
      return "complete";
    case completeness::Geodesic::incomplete:
      return "incomplete";
    default:
      return "inconclusive";
  }
}

inline std::string status_str(completeness::IntegralStatus s) {
  switch (s) {
    case completeness::IntegralStatus::convergent:
      return "convergent";
    case completeness::IntegralStatus::divergent:
      return "divergent";
    default:
      return "inconclusive";
  }
}

inline std::string termination_str(dynamics::Termination t) {
  switch (t) {
    case dynamics::Termination::reached_t_end:
      return "reached_t_end";
    case dynamics::Termination::collision:
      return "collision";
    case dynamics::Termination::escape:
      return "escape";
    default:
      return "step_failure";
  }
}

inline json verdict_json(const completeness::IntegralVerdict& v) {
  json j;
  j["status"] = status_str(v.status);
  if (v.status == completeness::IntegralStatus::convergent)
    j["value"] = v.value;
  json ev = json::array();
  for (const auto& [eps, partial] : v.evidence)
    ev.push_back({{"eps", eps}, {"partial", partial}});
  j["evidence"] = ev;
  return j;
}

inline json estimate_json(const stochastic::HittingEstimate& e) {
  return json{{"n_paths", e.n_paths}, {"n_hits", e.n_hits},
              {"horizon", e.horizon}, {"r0", e.r0},
              {"p_hat", e.p_hat},
              {"ci95", {e.ci95.first, e.ci95.second}},
              {"seed", e.seed},       {"eps_hit", e.eps_hit}};
}

}  // namespace detail

// Parse an experiment config file. Grammar: `key = value` lines with
// inline tables; exact key names per command; anything unrecognized is a
// hard error.
inline ExperimentConfig parse_experiment(const std::string& text) {
  using config::ConfigError;
  const config::Table top = config::parse(text);
  config::reject_unknown_keys(top,
                              {"command", "kernel", "seed", "output",
                               "classify", "shoot", "twobody", "sde",
                               "length"},
                              "experiment config");
  ExperimentConfig cfg;
  cfg.config_hash_source = text;

  if (!top.count("command")) throw ConfigError("missing 'command'");
  const std::string cmd = top.at("command").string("command");
  if (cmd == "classify")
    cfg.command = Command::classify;
  else if (cmd == "shoot")
    cfg.command = Command::shoot;
  else if (cmd == "twobody")
    cfg.command = Command::twobody;
  else if (cmd == "sde")
    cfg.command = Command::sde;
  else if (cmd == "length")
    cfg.command = Command::length;
  else if (cmd == "figure1")
    cfg.command = Command::figure1;
  else if (cmd == "repro-collision")
    cfg.command = Command::repro_collision;
  else
    throw ConfigError("unknown command '" + cmd + "'");

  const bool needs_kernel = cfg.command != Command::figure1 &&
                            cfg.command != Command::repro_collision;
  if (needs_kernel) {
    if (!top.count("kernel")) throw ConfigError("missing 'kernel'");
    cfg.kernel =
        config::kernel_spec_from_table(top.at("kernel").table("kernel"));
  }
  if (top.count("seed"))
    cfg.seed = static_cast<std::uint64_t>(top.at("seed").number("seed"));
  if (top.count("output")) {
    const auto& o = top.at("output").table("output");
    config::reject_unknown_keys(o, {"dir", "formats"}, "output");
    if (o.count("dir")) cfg.output.dir = o.at("dir").string("dir");
    if (o.count("formats"))
      for (const auto& f : o.at("formats").array("formats")) {
        const std::string fmt = f.string("formats");
        if (fmt != "csv" && fmt != "json" && fmt != "svg")
          throw ConfigError("unknown output format '" + fmt + "'");
        cfg.output.formats.insert(fmt);
      }
  }

  auto cmd_table = [&top](const char* name) -> const config::Table* {
    return top.count(name) ? &top.at(name).table(name) : nullptr;
  };
  for (const char* name : {"classify", "shoot", "twobody", "sde", "length"}) {
    if (top.count(name) && cmd != name)
      throw ConfigError(std::string("parameter table '") + name +
                        "' does not match command '" + cmd + "'");
  }

  if (const auto* t = cmd_table("classify")) {
    config::reject_unknown_keys(*t, {"a"}, "classify");
    if (t->count("a")) cfg.a = t->at("a").number("a");
  }
  if (const auto* t = cmd_table("shoot")) {
    config::reject_unknown_keys(*t, {"init", "t_end", "out", "x", "p"},
                                "shoot");
    if (!t->count("t_end")) throw ConfigError("shoot: missing t_end");
    cfg.t_end = t->at("t_end").number("t_end");
    if (t->count("init")) cfg.init_file = t->at("init").string("init");
    if (t->count("x") != t->count("p"))
      throw ConfigError("shoot: inline init needs both x and p");
    if (t->count("x")) {
      dynamics::PhasePoint s;
      s.x = detail::mat_from_array(t->at("x").array("x"), "x");
      s.p = detail::mat_from_array(t->at("p").array("p"), "p");
      cfg.init_inline = s;
    }
    if (cfg.init_file.empty() && !cfg.init_inline)
      throw ConfigError("shoot: need init file or inline x/p");
    if (t->count("out")) cfg.out_file = t->at("out").string("out");
  }
  if (const auto* t = cmd_table("twobody")) {
    config::reject_unknown_keys(*t, {"u", "Q", "P", "mode", "t_end"},
                                "twobody");
    for (const char* key : {"u", "Q", "P"})
      if (!t->count(key))
        throw ConfigError(std::string("twobody: missing ") + key);
    cfg.u = detail::vec_from_array(t->at("u").array("u"), "u");
    cfg.Q = detail::vec_from_array(t->at("Q").array("Q"), "Q");
    cfg.P = detail::vec_from_array(t->at("P").array("P"), "P");
    cfg.forecast = true;
    if (t->count("mode")) {
      const std::string m = t->at("mode").string("mode");
      if (m == "forecast")
        cfg.forecast = true;
      else if (m == "simulate")
        cfg.forecast = false;
      else
        throw ConfigError("twobody: mode must be forecast or simulate");
    }
    if (t->count("t_end")) cfg.t_end = t->at("t_end").number("t_end");
  }
  if (const auto* t = cmd_table("sde")) {
    config::reject_unknown_keys(
        *t, {"d", "r0", "dt", "horizon", "paths", "ce"}, "sde");
    if (t->count("d")) cfg.d = static_cast<int>(t->at("d").number("d"));
    if (t->count("r0")) cfg.r0 = t->at("r0").number("r0");
    if (t->count("dt")) cfg.dt = t->at("dt").number("dt");
    if (t->count("horizon")) cfg.horizon = t->at("horizon").number("horizon");
    if (t->count("paths"))
      cfg.paths = static_cast<long>(t->at("paths").number("paths"));
    if (t->count("ce")) cfg.with_ce = t->at("ce").boolean("ce");
  }
  if (const auto* t = cmd_table("length")) {
    config::reject_unknown_keys(*t, {"curve", "pair", "escape"}, "length");
    if (!t->count("curve")) throw ConfigError("length: missing curve");
    cfg.curve_file = t->at("curve").string("curve");
    if (t->count("pair")) {
      const auto& arr = t->at("pair").array("pair");
      if (arr.size() != 2) throw ConfigError("length: pair must be [i, j]");
      cfg.pair = {static_cast<int>(arr[0].number("pair")),
                  static_cast<int>(arr[1].number("pair"))};
    }
    if (t->count("escape"))
      cfg.escape = static_cast<int>(t->at("escape").number("escape"));
  }
  return cfg;
}

inline ExperimentConfig parse_experiment_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str());
}

struct RunResult {
  int exit_code = 0;
  json report;                      // primary JSON report (also on disk)
  std::vector<std::string> artifacts;  // paths written
};

// Execute one experiment and write its artifacts (atomically). The JSON
// report carries the config hash and library version; bodies contain no
// timestamps, so identical configs reproduce byte-identical reports.
inline RunResult run(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  RunResult rr;
  json& rep = rr.report;
  rep["version"] = version_string;
  rep["config_hash"] = io::hex64(io::fnv1a(cfg.config_hash_source));

  std::set<std::string> formats = cfg.output.formats;
  const fs::path dir = cfg.output.dir;

  auto emit_json = [&](const std::string& name) {
    if (!formats.count("json")) return;
    const fs::path p = dir / name;
    io::write_file_atomic(p, rep.dump(2) + "\n");
    rr.artifacts.push_back(p.string());
  };

  switch (cfg.command) {
    case Command::classify: {
      if (formats.empty()) formats = {"json"};
      const auto kernel = kernels::make_kernel(cfg.kernel);
      const auto crep = completeness::classify_geodesic(kernel, cfg.a);
      rep["geodesic"] = detail::geodesic_str(crep.geodesic);
      rep["a_used"] = crep.a_used;
      json ev = json::array();
      for (const auto& [eps, partial] : crep.criterion.evidence)
        ev.push_back({{"eps", eps}, {"partial", partial}});
      rep["evidence"] = ev;
      try {
        const auto fit = completeness::estimate_gap_exponent(kernel);
        rep["exponent"] = {{"gamma", fit.gamma},
                           {"D", fit.D},
                           {"residual", fit.residual}};
      } catch (const std::exception&) {
        rep["exponent"] = nullptr;
      }
      emit_json("classify.json");
      if (crep.geodesic == completeness::Geodesic::inconclusive)
        rr.exit_code = 2;
      break;
    }

    case Command::shoot: {
      if (formats.empty()) formats = {"csv", "json"};
      const auto kernel = kernels::make_kernel(cfg.kernel);
      const auto s0 = detail::load_init(cfg);
      const auto traj = dynamics::integrate(s0, kernel, cfg.t_end);
      rep["termination"] = detail::termination_str(traj.termination);
      if (traj.termination == dynamics::Termination::collision)
        rep["collision"] = {{"pair", {traj.collision_pair.first,
                                      traj.collision_pair.second}},
                            {"t_event", traj.t_event}};
      if (traj.termination == dynamics::Termination::escape)
        rep["escape"] = {{"index", traj.escape_index},
                         {"t_event", traj.t_event}};
      rep["conserved_drift"] = {{"H", traj.conserved_drift.H},
                                {"P", traj.conserved_drift.P},
                                {"L", traj.conserved_drift.L}};
      if (formats.count("csv")) {
        const fs::path p =
            cfg.out_file.empty() ? dir / "traj.csv" : fs::path(cfg.out_file);
        io::write_file_atomic(p, io::trajectory_csv(traj, kernel));
        rr.artifacts.push_back(p.string());
      }
      emit_json("shoot.json");
      break;
    }

    case Command::twobody: {
      if (formats.empty()) formats = {"json"};
      const auto kernel = kernels::make_kernel(cfg.kernel);
      const auto tb = twobody::make_state(cfg.u, cfg.Q, cfg.P);
      if (cfg.forecast) {
        const auto fc = twobody::breakdown_forecast(tb, kernel);
        rep["D"] = fc.D;
        rep["omega"] = fc.omega;
        rep["verdict"] = fc.verdict == twobody::Verdict::global_existence
                             ? "global_existence"
                         : fc.verdict == twobody::Verdict::finite_time_collision
                             ? "finite_time_collision"
                             : "inconclusive";
        if (fc.bound) rep["bound"] = *fc.bound;
        if (fc.predicted_T) rep["predicted_T"] = *fc.predicted_T;
        emit_json("forecast.json");
        if (fc.verdict == twobody::Verdict::inconclusive) rr.exit_code = 2;
      } else {
        const auto traj = twobody::simulate(tb, kernel, cfg.t_end);
        rep["termination"] = detail::termination_str(traj.termination);
        rep["min_r"] = traj.min_r;
        rep["D_drift"] = traj.d_drift;
        rep["omega_drift"] = traj.omega_drift;
        if (traj.termination == dynamics::Termination::collision)
          rep["t_event"] = traj.t_event;
        if (formats.count("csv")) {
          // u, Q, v per sample
          std::string csv = "t";
          const int d = tb.d();
          for (const char* blk : {"u", "Q", "v"})
            for (int k = 1; k <= d; ++k)
              csv += std::string(",") + blk + "_" + std::to_string(k);
          csv += "\n";
          for (std::size_t s = 0; s < traj.states.size(); ++s) {
            csv += io::format_double(traj.times[s]);
            const auto& st = traj.states[s];
            for (const auto* vec : {&st.u, &st.Q, &st.v})
              for (Eigen::Index k = 0; k < vec->size(); ++k)
                csv += "," + io::format_double((*vec)[k]);
            csv += "\n";
          }
          const fs::path p = dir / "twobody.csv";
          io::write_file_atomic(p, csv);
          rr.artifacts.push_back(p.string());
        }
        emit_json("twobody.json");
      }
      break;
    }

    case Command::sde: {
      if (formats.empty()) formats = {"json"};
      const auto kernel = kernels::make_kernel(cfg.kernel);
      stochastic::SimOpts opts;
      opts.r0 = cfg.r0;
      opts.dt = cfg.dt;
      opts.horizon = cfg.horizon;
      opts.n_paths = cfg.paths;
      opts.seed = cfg.seed;
      const auto estimates = stochastic::simulate_paths_multi(
          kernel, cfg.d, opts, {1e-3, 1e-5});
      json sens = json::array();
      for (const auto& e : estimates) {
        if (e.eps_hit == opts.eps_hit) rep["estimate"] = detail::estimate_json(e);
        sens.push_back(detail::estimate_json(e));
      }
      rep["sensitivity"] = sens;
      if (cfg.with_ce) {
        const double a = stochastic::default_ce_a(kernel);
        const auto ce = stochastic::ce_classify(kernel, cfg.d, a);
        json cj;
        cj["I_rho"] = detail::verdict_json(ce.I_rho);
        cj["I_speed"] = detail::verdict_json(ce.I_speed);
        cj["I_speed_s"] = detail::verdict_json(ce.I_speed_s);
        cj["conclusion"] =
            ce.conclusion == stochastic::Conclusion::hits_zero_positive_prob
                ? "hits_zero_positive_prob"
            : ce.conclusion == stochastic::Conclusion::conditions_not_met
                ? "conditions_not_met"
                : "inconclusive";
        cj["a_used"] = ce.a_used;
        cj["heuristic"] = ce.heuristic;
        rep["ce"] = cj;
        if (ce.conclusion == stochastic::Conclusion::inconclusive)
          rr.exit_code = 2;
      }
      emit_json("sde.json");
      break;
    }

    case Command::length: {
      if (formats.empty()) formats = {"json"};
      const auto kernel = kernels::make_kernel(cfg.kernel);
      std::ifstream in(cfg.curve_file);
      if (!in)
        throw std::runtime_error("cannot open curve file " + cfg.curve_file);
      const auto curve = io::read_curve_csv(in);
      rep["length"] = geometry::curve_length(curve, kernel);
      if (cfg.pair)
        rep["collision_bound"] = geometry::collision_bound(
            curve, cfg.pair->first, cfg.pair->second, kernel);
      if (cfg.escape)
        rep["escape_bound"] = geometry::escape_bound(curve, *cfg.escape, kernel);
      emit_json("length.json");
      break;
    }

    case Command::figure1: {
      if (formats.empty()) formats = {"svg"};
      const auto lap = kernels::laplacian();
      const auto bes = kernels::c1_bessel();
      io::SvgSeries s1{"K(r) = exp(-r)", "#1f77b4", {}};
      io::SvgSeries s2{"K(r) = 2(1+r)exp(-r)", "#d62728", {}};
      const int pts = 400;
      for (int i = 0; i <= pts; ++i) {
        const double r = 4.0 * i / pts;
        s1.points.emplace_back(r, lap.eval(r));
        s2.points.emplace_back(r, bes.eval(r));
      }
      if (formats.count("svg")) {
        const fs::path p = dir / "figure1.svg";
        io::write_file_atomic(p, io::svg_plot({s1, s2}, 640, 420));
        rr.artifacts.push_back(p.string());
      }
      if (formats.count("csv")) {
        std::string csv = "r,laplacian,c1_bessel\n";
        for (int i = 0; i <= pts; ++i)
          csv += io::format_double(s1.points[i].first) + "," +
                 io::format_double(s1.points[i].second) + "," +
                 io::format_double(s2.points[i].second) + "\n";
        const fs::path p = dir / "figure1.csv";
        io::write_file_atomic(p, csv);
        rr.artifacts.push_back(p.string());
      }
      rep["samples"] = pts + 1;
      emit_json("figure1.json");
      break;
    }

    case Command::repro_collision: {
      if (formats.empty()) formats = {"csv", "json"};
      const auto kernel = kernels::laplacian();
      const auto s0 = twobody::laplacian_exact(1.0, 1.0, 0.0);
      dynamics::IntOpts opts;
      opts.rtol = 1e-12;
      opts.atol = 1e-14;
      const auto traj = dynamics::integrate(s0, kernel, 2.0, opts);
      rep["termination"] = detail::termination_str(traj.termination);
      rep["t_collision"] = traj.t_event;
      if (formats.count("csv")) {
        const fs::path p = dir / "repro_collision.csv";
        io::write_file_atomic(p, io::trajectory_csv(traj, kernel));
        rr.artifacts.push_back(p.string());
      }
      emit_json("repro_collision.json");
      break;
    }
  }
  return rr;
}

}  // namespace landmark::cli
