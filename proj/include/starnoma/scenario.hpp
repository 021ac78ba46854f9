#pragma once

#include <filesystem>
#include <future>
#include <optional>

#include <json.hpp>

#include "starnoma/csv.hpp"
#include "starnoma/pgam.hpp"

namespace starnoma {

enum class Pipeline { Mc, Prop1, Closed, Pgam, Compare };

struct ScenarioSpec {
  std::string name = "scenario";
  SystemConfig config;
  std::uint64_t stats_seed = 1;
  std::uint64_t theta_seed = 1;
  std::uint64_t mc_seed = 12345;
  std::string theta_kind = "random";  // random | uniform-split | explicit
  std::optional<std::pair<Vec, Vec>> theta_values;
  Pipeline pipeline = Pipeline::Compare;
  std::string sweep_axis = "snr_db";  // snr_db | K | T
  std::vector<double> sweep_grid;
  int n_trials = 1000;
  double delta = 1e-4;
  bool deterministic_F = false;
  bool normalize_gain = false;
  double los_amp = 1.0;
  SolverOptions solver;
  PgamOptions pgam;
  std::string output_stem;

  void validate() const {
    config.validate();
    if (sweep_grid.empty()) throw ConfigError("scenario: sweep grid must be non-empty");
    for (std::size_t i = 1; i < sweep_grid.size(); ++i)
      if (sweep_grid[i] <= sweep_grid[i - 1])
        throw ConfigError("scenario: sweep grid must be strictly increasing");
    if (sweep_axis != "snr_db" && sweep_axis != "K" && sweep_axis != "T")
      throw ConfigError("scenario: unknown sweep axis " + sweep_axis);
    if ((pipeline == Pipeline::Closed || pipeline == Pipeline::Pgam) && !deterministic_F)
      throw ConfigError("scenario: closed/pgam pipelines require deterministic_F");
    if (n_trials < 1) throw ConfigError("scenario: n_trials must be >= 1");
    if (pipeline == Pipeline::Pgam && sweep_axis != "snr_db")
      throw ConfigError("scenario: pgam pipeline sweeps snr_db only");
  }
};

inline ScenarioSpec parse_scenario(const nlohmann::json& j) {
  ScenarioSpec s;
  s.name = j.value("name", s.name);
  const auto& c = j.at("config");
  s.config.T = c.at("T").get<int>();
  s.config.R1 = c.at("R1").get<int>();
  s.config.R2 = c.at("R2").get<int>();
  s.config.K = c.value("K", 0);
  s.config.L = c.value("L", std::vector<int>{});
  if (s.config.L.empty() && s.config.K > 0 && c.contains("L_per_panel"))
    s.config.L.assign(s.config.K, c.at("L_per_panel").get<int>());
  s.config.P = c.value("P", 1.0);
  s.config.sigma0_sq = c.value("sigma0_sq", 1.0);
  s.config.kappa1 = c.value("kappa1", 0.1);
  s.config.kappa2 = c.value("kappa2", 1.0 - s.config.kappa1);
  s.config.rho1 = c.value("rho1", 1.0);
  s.config.rho2 = c.value("rho2", 1.0);
  s.config.unit = j.value("rate_unit", std::string("bits")) == "nats" ? RateUnit::Nats
                                                                      : RateUnit::Bits;
  s.config.i2_verbatim = j.value("i2_verbatim", true);
  s.config.fold_power = j.value("fold_power", true);

  s.stats_seed = j.value("stats_seed", 1);
  s.theta_seed = j.value("theta_seed", 1);
  s.mc_seed = j.value("mc_seed", 12345);
  s.theta_kind = j.value("theta", std::string("random"));
  const std::string pipe = j.value("pipeline", std::string("compare"));
  if (pipe == "mc") s.pipeline = Pipeline::Mc;
  else if (pipe == "prop1") s.pipeline = Pipeline::Prop1;
  else if (pipe == "closed") s.pipeline = Pipeline::Closed;
  else if (pipe == "pgam") s.pipeline = Pipeline::Pgam;
  else if (pipe == "compare") s.pipeline = Pipeline::Compare;
  else throw ConfigError("scenario: unknown pipeline " + pipe);

  if (j.contains("sweep")) {
    s.sweep_axis = j.at("sweep").value("axis", std::string("snr_db"));
    s.sweep_grid = j.at("sweep").at("grid").get<std::vector<double>>();
  } else {
    s.sweep_grid = {j.value("snr_db", 10.0)};
  }
  s.n_trials = j.value("n_trials", 1000);
  s.delta = j.value("delta", 1e-4);
  s.deterministic_F = j.value("deterministic_F", false);
  s.normalize_gain = j.value("normalize_direct_gain", false);
  s.los_amp = j.value("los_amp", 1.0);
  if (j.contains("solver")) {
    const auto& sv = j.at("solver");
    s.solver.tol = sv.value("tol", s.solver.tol);
    s.solver.max_iters = sv.value("max_iters", s.solver.max_iters);
    s.solver.damping = sv.value("damping", s.solver.damping);
    s.solver.eps_im = sv.value("eps_im", s.solver.eps_im);
  }
  if (j.contains("pgam")) {
    const auto& p = j.at("pgam");
    s.pgam.eps = p.value("eps", s.pgam.eps);
    s.pgam.max_iters = p.value("max_iters", s.pgam.max_iters);
  }
  s.pgam.solver = s.solver;
  s.pgam.delta = s.delta;
  s.output_stem = j.value("output", s.name);
  s.validate();
  return s;
}

inline ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("scenario: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return parse_scenario(j);
}

struct RunOptions {
  std::string out_dir = ".";
  int threads = 1;
  std::optional<std::uint64_t> seed_override;
  bool verbose = false;
};

struct RunArtifacts {
  CsvTable table;
  nlohmann::json manifest;
  std::vector<std::string> files;
};

namespace detail {

struct PointSetup {
  SystemConfig cfg;
  ChannelStats stats;
  ThetaState theta;
};

// Materialize the configuration/statistics for one sweep point. K and T
// sweeps regenerate statistics from the same seed; SNR sweeps only move
// sigma0^2.
inline PointSetup setup_point(const ScenarioSpec& spec, double value) {
  PointSetup p;
  p.cfg = spec.config;
  if (spec.sweep_axis == "snr_db") {
    p.cfg.sigma0_sq = 1.0 / db_to_linear(value);
  } else if (spec.sweep_axis == "K") {
    const int k = static_cast<int>(value);
    const int per = spec.config.K > 0 ? spec.config.L.front() : 30;
    p.cfg.K = k;
    p.cfg.L.assign(k, per);
  } else {
    p.cfg.T = static_cast<int>(value);
  }
  StatsOptions so;
  so.los_amp = spec.los_amp;
  so.deterministic_F = spec.deterministic_F;
  p.stats = ChannelStats::generate(p.cfg, spec.stats_seed, so);
  if (spec.theta_kind == "uniform-split")
    p.theta = ThetaState::uniform_split(p.cfg.L);
  else if (spec.theta_kind == "explicit" && spec.theta_values)
    p.theta = ThetaState::from_values(p.cfg.L, spec.theta_values->first,
                                      spec.theta_values->second);
  else
    p.theta = ThetaState::random(p.cfg.L, spec.theta_seed);
  if (spec.normalize_gain) p.stats = normalize_direct_gain(p.stats, p.theta);
  return p;
}

inline std::uint64_t config_hash(const nlohmann::json& j) {
  return std::hash<std::string>{}(j.dump());
}

}  // namespace detail

inline RunArtifacts run_scenario(const ScenarioSpec& spec, const RunOptions& opts = {}) {
  spec.validate();
  const std::uint64_t mc_seed = opts.seed_override.value_or(spec.mc_seed);

  CsvTable table;
  switch (spec.pipeline) {
    case Pipeline::Mc:
      table.header = {"sweep", "I1", "I2", "sum", "t", "stderr1", "stderr2", "n_trials"};
      break;
    case Pipeline::Prop1:
    case Pipeline::Closed:
      table.header = {"sweep", "I1", "I2", "sum", "t"};
      break;
    case Pipeline::Pgam:
      table.header = {"iter", "sum_rate", "step", "grad_norm"};
      break;
    case Pipeline::Compare:
      table.header = {"sweep",  "mc_I1",   "mc_I2",   "mc_sum",  "asym_I1", "asym_I2",
                      "asym_sum", "t_mc",  "t_asym",  "gap1_pct", "gap2_pct", "n_trials"};
      break;
  }

  auto run_point = [&](double value) -> std::vector<CsvValue> {
    detail::PointSetup p = detail::setup_point(spec, value);
    AsymptoticOptions aopts;
    aopts.solver = spec.solver;
    aopts.delta = spec.delta;
    McOptions mopts;
    mopts.threads = 1;  // points already run in parallel

    switch (spec.pipeline) {
      case Pipeline::Mc: {
        const RateReport r = mc_average(p.stats, p.theta, p.cfg, spec.n_trials, mc_seed, mopts);
        return {value, r.I1, r.I2, r.sum(), r.t, r.stderr1, r.stderr2,
                static_cast<std::int64_t>(r.n_trials)};
      }
      case Pipeline::Prop1: {
        const RateReport r = asymptotic_rates(p.stats, p.theta, p.cfg, aopts);
        return {value, r.I1, r.I2, r.sum(), r.t};
      }
      case Pipeline::Closed: {
        const RateReport r = rates_closed(p.stats, p.theta, p.cfg, aopts);
        return {value, r.I1, r.I2, r.sum(), r.t};
      }
      case Pipeline::Compare: {
        const RateReport mc = mc_average(p.stats, p.theta, p.cfg, spec.n_trials, mc_seed, mopts);
        const RateReport as = spec.deterministic_F ? rates_closed(p.stats, p.theta, p.cfg, aopts)
                                                   : asymptotic_rates(p.stats, p.theta, p.cfg, aopts);
        return {value, mc.I1, mc.I2, mc.sum(), as.I1, as.I2, as.sum(), mc.t, as.t,
                100.0 * std::abs(as.I1 - mc.I1) / std::abs(mc.I1),
                100.0 * std::abs(as.I2 - mc.I2) / std::abs(mc.I2),
                static_cast<std::int64_t>(mc.n_trials)};
      }
      default:
        throw std::logic_error("unreachable");
    }
  };

  if (spec.pipeline == Pipeline::Pgam) {
    detail::PointSetup p = detail::setup_point(spec, spec.sweep_grid.front());
    PgamOptions popts = spec.pgam;
    popts.solver = spec.solver;
    const PgamTrace tr = optimize(p.stats, p.cfg, p.theta, popts);
    for (const auto& it : tr.iterates)
      table.rows.push_back(
          {static_cast<std::int64_t>(it.iter), it.sum_rate, it.step, it.grad_norm});
    if (tr.stalled && opts.verbose)
      std::fprintf(stderr, "pgam: line search stalled at iterate %zu\n", tr.iterates.size());
  } else if (opts.threads > 1 && spec.sweep_grid.size() > 1) {
    std::vector<std::future<std::vector<CsvValue>>> futs;
    for (double v : spec.sweep_grid)
      futs.push_back(std::async(std::launch::async, run_point, v));
    for (auto& f : futs) table.rows.push_back(f.get());
  } else {
    for (double v : spec.sweep_grid) table.rows.push_back(run_point(v));
  }

  RunArtifacts art;
  art.table = std::move(table);
  nlohmann::json manifest;
  manifest["name"] = spec.name;
  manifest["pipeline"] = static_cast<int>(spec.pipeline);
  manifest["sweep_axis"] = spec.sweep_axis;
  manifest["sweep_grid"] = spec.sweep_grid;
  manifest["stats_seed"] = spec.stats_seed;
  manifest["theta_seed"] = spec.theta_seed;
  manifest["mc_seed"] = mc_seed;
  manifest["n_trials"] = spec.n_trials;
  manifest["delta"] = spec.delta;
  manifest["solver_tol"] = spec.solver.tol;
  manifest["solver_damping"] = spec.solver.damping;
  manifest["eps_im"] = spec.solver.eps_im;
  manifest["config"] = {{"T", spec.config.T},       {"R1", spec.config.R1},
                        {"R2", spec.config.R2},     {"K", spec.config.K},
                        {"L", spec.config.L},       {"P", spec.config.P},
                        {"kappa1", spec.config.kappa1}, {"rho1", spec.config.rho1},
                        {"rho2", spec.config.rho2}};
  manifest["version"] = "starnoma 0.1.0";
  manifest["config_hash"] = detail::config_hash(manifest);
  art.manifest = std::move(manifest);
  return art;
}

inline std::vector<std::string> write_artifacts(const RunArtifacts& art,
                                                const std::string& stem,
                                                const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string csv_path = (fs::path(out_dir) / (stem + ".csv")).string();
  const std::string man_path = (fs::path(out_dir) / (stem + ".manifest.json")).string();
  emit_csv(art.table, csv_path);
  std::ofstream man(man_path, std::ios::binary);
  man << art.manifest.dump(2) << "\n";
  if (!man) throw std::runtime_error("cannot write manifest " + man_path);
  return {csv_path, man_path};
}

}  // namespace starnoma
