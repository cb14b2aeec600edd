#include "dpcollab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace dpcollab {

namespace {

using nlohmann::json;

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string format_full(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Labels keep '.' out of filenames: 0.1 -> "0p1".
std::string file_label(const std::string& text) {
  std::string out = text;
  std::replace(out.begin(), out.end(), '.', 'p');
  std::replace(out.begin(), out.end(), ' ', '_');
  return out;
}

struct GridPointConfig {
  std::string label;
  double grid_value = 0.0;
  std::vector<int> sizes;
  std::vector<double> epsilons;
};

std::vector<GridPointConfig> expand_grid(const ExperimentConfig& cfg) {
  std::vector<GridPointConfig> points;
  switch (cfg.axis) {
    case SweepAxis::kEpsilon:
      for (double eps : cfg.grid) {
        points.push_back({"eps_" + format_value(eps), eps, cfg.owner_sizes,
                          std::vector<double>(cfg.owner_sizes.size(), eps)});
      }
      break;
    case SweepAxis::kN:
      for (double n : cfg.grid) {
        const int per_owner = static_cast<int>(std::llround(n));
        if (per_owner < 1) throw std::invalid_argument("n grid values must be >= 1");
        points.push_back({"n_" + format_value(n), n,
                          std::vector<int>(cfg.budgets.size(), per_owner), cfg.budgets});
      }
      break;
    case SweepAxis::kScenario: {
      int index = 1;
      for (const CollabScenario& sc : cfg.scenarios) {
        GridPointConfig p;
        p.label = sc.id.empty() ? "scenario_" + std::to_string(index) : sc.id;
        p.grid_value = static_cast<double>(index);
        for (long s : sc.owner_sizes) p.sizes.push_back(static_cast<int>(s));
        p.epsilons = sc.epsilons;
        points.push_back(std::move(p));
        ++index;
      }
      break;
    }
  }
  if (points.empty()) throw std::invalid_argument("run_experiment: empty sweep grid");
  return points;
}

Dataset load_csv_data(const ExperimentConfig& cfg, int total_n) {
    // Prepped numeric CSV: features x0..x{p-1} with target column y.
    std::ifstream in(cfg.data_csv);
    if (!in) throw std::runtime_error("cannot open " + cfg.data_csv);
    std::string header;
    std::getline(in, header);
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= header.size()) {
      const std::size_t comma = header.find(',', start);
      names.push_back(header.substr(start, comma == std::string::npos ? comma : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (names.empty() || names.back() != "y") {
      throw std::invalid_argument(cfg.data_csv + ": prepped CSV must end with column y");
    }
    in.seekg(0);
    std::vector<std::string> features(names.begin(), names.end() - 1);
    const RawTable table = load_csv(cfg.data_csv, "y", features);
    Dataset all = table_to_dataset(table, "y");
    if (all.size() < static_cast<std::size_t>(total_n)) {
      throw std::invalid_argument(cfg.data_csv + ": needs " + std::to_string(total_n) +
                                  " records, has " + std::to_string(all.size()));
    }
    all.records.resize(static_cast<std::size_t>(total_n));
    return all;
}

double trajectory_terminal_psi(const LossModel& loss, std::span<const Dataset> pooled,
                               const Trajectory& traj, double f_star) {
  const Vec& final_point = traj.theta_bar.empty() ? traj.theta.back() : traj.theta_bar.back();
  return relative_fitness(fitness(loss, final_point, pooled), f_star);
}

}  // namespace

Dataset load_experiment_data(const ExperimentConfig& cfg, int total_n) {
  if (!cfg.data_csv.empty()) return load_csv_data(cfg, total_n);
  // One seed for every grid point: instances of different sizes share a
  // record prefix, mirroring contiguous splits of a single master dataset.
  const std::uint64_t data_seed = mix_seed(cfg.master_seed, 0xda7a);
  return synth_instance(cfg.loss_kind, total_n, cfg.synth_dim, cfg.synth_noise_sd, data_seed).data;
}

ResolvedInstance resolve_instance(const ExperimentConfig& cfg, Dataset data) {
  ResolvedInstance inst;
  inst.loss.kind = cfg.loss_kind;
  inst.loss.theta_max = cfg.theta_max;
  inst.loss.xi_clip = 1.0;  // placeholder for the default-xi probe below
  inst.pooled.push_back(std::move(data));
  const Vec theta_init(inst.loss.param_dim(inst.pooled.front().feature_dim()), 0.0);
  inst.loss.xi_clip =
      cfg.xi_clip > 0.0 ? cfg.xi_clip : default_xi_clip(inst.loss, theta_init, inst.pooled);

  inst.curvature = estimate_curvature(inst.loss, inst.pooled);
  inst.train_cfg.rounds_t = cfg.rounds_t;
  inst.train_cfg.mode = cfg.mode;
  inst.train_cfg.rho = cfg.rho;
  inst.train_cfg.c1 = cfg.c1 > 0.0 ? cfg.c1 : 1.0 / (inst.curvature.grad_lipschitz + 1.0);
  inst.train_cfg.const_step = cfg.const_step > 0.0
                                  ? cfg.const_step
                                  : 1.0 / std::max(inst.curvature.grad_lipschitz, 1e-12);
  inst.train_cfg.theta_init = theta_init;

  inst.theta_star = nonprivate_train(inst.loss, inst.pooled, inst.train_cfg);
  inst.f_star = fitness(inst.loss, inst.theta_star, inst.pooled);
  return inst;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: empty input");
  if (q < 0.0 || q > 100.0) throw std::invalid_argument("percentile: q outside [0,100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

double loglog_slope(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("loglog_slope: need at least two matching points");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::invalid_argument("loglog_slope: values must be positive");
    }
    const double lx = std::log10(xs[i]);
    const double ly = std::log10(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = static_cast<double>(xs.size());
  const double denom = m * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) throw std::invalid_argument("loglog_slope: degenerate xs");
  return (m * sxy - sx * sy) / denom;
}

Trajectory seeded_private_run(const LossModel& loss, std::vector<DataOwner>& owners,
                              const TrainConfig& cfg, std::uint64_t run_seed) {
  for (DataOwner& owner : owners) {
    owner.budget.spent_rounds = 0;
    owner.stream = NoiseStream(mix_seed(run_seed, static_cast<std::uint64_t>(owner.id)));
  }
  return cfg.mode == TrainMode::kShrinkingStep ? shrinking_step_descent(loss, owners, cfg)
                                               : averaged_projected_descent(loss, owners, cfg);
}

RunStatistics run_experiment(const ExperimentConfig& cfg) {
  if (cfg.mc_runs < 1) throw std::invalid_argument("run_experiment: mc_runs must be >= 1");
  if (cfg.owner_sizes.size() != cfg.budgets.size()) {
    throw std::invalid_argument("run_experiment: owner_sizes and budgets must match");
  }
  if (cfg.mode == TrainMode::kNonPrivateConstant) {
    throw std::invalid_argument("run_experiment: sweeps need a private training mode, not the baseline");
  }
  const std::vector<GridPointConfig> grid = expand_grid(cfg);

  RunStatistics stats;
  double calibrated_c2 = cfg.c2;
  for (const GridPointConfig& point : grid) {
    const int total_n = std::accumulate(point.sizes.begin(), point.sizes.end(), 0);
    // theta_star is derived once per grid point and shared by all R runs.
    const ResolvedInstance inst = resolve_instance(cfg, load_experiment_data(cfg, total_n));
    const LossModel& loss = inst.loss;
    const TrainConfig& train_cfg = inst.train_cfg;
    const std::vector<Dataset>& pooled = inst.pooled;
    const double f_star = inst.f_star;

    // Owners are built once; each run resets budgets and reseeds streams.
    std::vector<Dataset> shards = partition(pooled.front(), point.sizes);
    std::vector<DataOwner> owners;
    std::size_t offset = 0;
    for (std::size_t i = 0; i < shards.size(); ++i) {
      DataOwner owner = make_owner(static_cast<int>(i), loss, std::move(shards[i]),
                                   point.epsilons[i], cfg.rounds_t, /*seed=*/0);
      owner.src_begin = offset;
      owner.src_end = offset + static_cast<std::size_t>(point.sizes[i]);
      offset = owner.src_end;
      owners.push_back(std::move(owner));
    }
    check_disjoint_shards(owners);

    GridPointStats ps;
    ps.label = point.label;
    ps.grid_value = point.grid_value;
    ps.n_total = total_n;
    ps.epsilons = point.epsilons;
    ps.f_star = f_star;
    ps.xi = loss.xi_clip;

    std::vector<std::vector<double>> psi_per_round;  // [round][run]
    std::vector<double> terminal;
    for (int run = 0; run < cfg.mc_runs; ++run) {
      const std::uint64_t run_seed = cfg.master_seed + static_cast<std::uint64_t>(run);
      Trajectory traj;
      try {
        traj = seeded_private_run(loss, owners, train_cfg, run_seed);
      } catch (const DivergenceError&) {
        ps.divergent_runs += 1;
        continue;
      }
      const std::vector<Vec>& track = traj.theta_bar.empty() ? traj.theta : traj.theta_bar;
      if (psi_per_round.empty()) psi_per_round.resize(track.size());
      for (std::size_t k = 0; k < track.size(); ++k) {
        psi_per_round[k].push_back(relative_fitness(fitness(loss, track[k], pooled), f_star));
      }
      terminal.push_back(trajectory_terminal_psi(loss, pooled, traj, f_star));
    }
    if (terminal.empty()) {
      throw std::runtime_error("run_experiment: every run diverged at grid point " + point.label);
    }

    for (const std::vector<double>& round_values : psi_per_round) {
      if (round_values.empty()) continue;
      ps.round_percentiles.push_back({percentile(round_values, 25.0),
                                      percentile(round_values, 50.0),
                                      percentile(round_values, 75.0)});
    }
    ps.mean_terminal_psi =
        std::accumulate(terminal.begin(), terminal.end(), 0.0) / static_cast<double>(terminal.size());

    // Forecast for the same configuration. The averaged-algorithm bound needs
    // the calibration constant; fit it once on the first grid point.
    ps.forecast_assumptions_ok =
        cfg.loss_kind == LossKind::kLinearRegression && !inst.curvature.rank_deficient;
    if (cfg.mode == TrainMode::kShrinkingStep) {
      ps.forecast = smooth_case_bounds(loss.xi_clip, cfg.rho,
                                       std::max(inst.curvature.strong_convexity, 1e-12),
                                       total_n, point.epsilons, cfg.slack);
    } else {
      if (calibrated_c2 <= 0.0) {
        // calibration needs a noisy reference point with a positive gap
        calibrated_c2 =
            inverse_epsilon_sq_sum(point.epsilons) > 0.0 && ps.mean_terminal_psi > 0.0
                ? calibrate_c2(ps.mean_terminal_psi, f_star, loss.xi_clip, total_n,
                               point.epsilons)
                : 1.0;
      }
      const std::optional<double> curv = inst.curvature.strong_convexity > 0.0
                                             ? std::optional<double>(inst.curvature.strong_convexity)
                                             : std::nullopt;
      ps.forecast = averaged_case_bounds(loss.xi_clip, calibrated_c2, curv, total_n,
                                         point.epsilons);
    }

    stats.points.push_back(std::move(ps));
  }

  stats.fitted_slope = std::numeric_limits<double>::quiet_NaN();
  if (cfg.axis != SweepAxis::kScenario && stats.points.size() >= 2) {
    std::vector<double> xs, ys;
    for (const GridPointStats& p : stats.points) {
      if (p.grid_value > 0.0 && p.mean_terminal_psi > 0.0) {
        xs.push_back(p.grid_value);
        ys.push_back(p.mean_terminal_psi);
      }
    }
    if (xs.size() >= 2) stats.fitted_slope = loglog_slope(xs, ys);
  }
  return stats;
}

void emit_results(const RunStatistics& stats, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("emit_results: cannot create " + dir + ": " + ec.message());

  for (const GridPointStats& point : stats.points) {
    std::ofstream rounds(fs::path(dir) / ("rounds_" + file_label(point.label) + ".csv"));
    if (!rounds) throw std::runtime_error("emit_results: cannot write rounds CSV");
    rounds << "round,p25,p50,p75\n";
    for (std::size_t k = 0; k < point.round_percentiles.size(); ++k) {
      const auto& p = point.round_percentiles[k];
      rounds << (k + 1) << ',' << format_full(p[0]) << ',' << format_full(p[1]) << ','
             << format_full(p[2]) << "\n";
    }
  }

  std::ofstream summary(fs::path(dir) / "summary.csv");
  if (!summary) throw std::runtime_error("emit_results: cannot write summary.csv");
  summary << "grid_value,mean_psi,fitted_slope\n";
  for (const GridPointStats& point : stats.points) {
    summary << format_full(point.grid_value) << ',' << format_full(point.mean_terminal_psi) << ','
            << format_full(stats.fitted_slope) << "\n";
  }

  json forecast = json::array();
  for (const GridPointStats& point : stats.points) {
    RankedScenario ranked;
    ranked.scenario.id = point.label;
    ranked.forecast = point.forecast;
    json j = json::parse(forecast_report_json(ranked, point.forecast_assumptions_ok));
    j["empirical_mean_psi"] = point.mean_terminal_psi;
    j["f_star"] = point.f_star;
    j["divergent_runs"] = point.divergent_runs;
    forecast.push_back(std::move(j));
  }
  std::ofstream forecast_out(fs::path(dir) / "forecast.json");
  if (!forecast_out) throw std::runtime_error("emit_results: cannot write forecast.json");
  forecast_out << forecast.dump(2) << "\n";
}

namespace {

double parse_budget(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    throw std::invalid_argument("bad budget string: " + s);
  }
  return j.get<double>();
}

std::vector<double> parse_budget_list(const json& j) {
  std::vector<double> out;
  for (const json& e : j) out.push_back(parse_budget(e));
  return out;
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  if (j.contains("loss")) {
    const std::string loss = j["loss"].get<std::string>();
    if (loss == "regression") {
      cfg.loss_kind = LossKind::kLinearRegression;
    } else if (loss == "svm") {
      cfg.loss_kind = LossKind::kLinearSvm;
    } else {
      throw std::invalid_argument("config: loss must be 'regression' or 'svm'");
    }
  }
  if (j.contains("owner_sizes")) cfg.owner_sizes = j["owner_sizes"].get<std::vector<int>>();
  if (j.contains("budgets")) cfg.budgets = parse_budget_list(j["budgets"]);
  if (j.contains("rounds")) cfg.rounds_t = j["rounds"].get<int>();
  if (j.contains("mode")) {
    const std::string mode = j["mode"].get<std::string>();
    if (mode == "shrinking_step") {
      cfg.mode = TrainMode::kShrinkingStep;
    } else if (mode == "averaged") {
      cfg.mode = TrainMode::kAveragedProjection;
    } else if (mode == "nonprivate") {
      cfg.mode = TrainMode::kNonPrivateConstant;
    } else {
      throw std::invalid_argument("config: mode must be shrinking_step, averaged, or nonprivate");
    }
  }
  if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
  if (j.contains("c1")) cfg.c1 = j["c1"].get<double>();
  if (j.contains("const_step")) cfg.const_step = j["const_step"].get<double>();
  if (j.contains("theta_max")) cfg.theta_max = j["theta_max"].get<double>();
  if (j.contains("xi_clip")) cfg.xi_clip = j["xi_clip"].get<double>();
  if (j.contains("c2")) cfg.c2 = j["c2"].get<double>();
  if (j.contains("slack")) cfg.slack = j["slack"].get<double>();
  if (j.contains("mc_runs")) cfg.mc_runs = j["mc_runs"].get<int>();
  if (j.contains("master_seed")) cfg.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("sweep")) {
    const json& sweep = j["sweep"];
    const std::string axis = sweep.value("axis", "epsilon");
    if (axis == "epsilon") {
      cfg.axis = SweepAxis::kEpsilon;
    } else if (axis == "n") {
      cfg.axis = SweepAxis::kN;
    } else if (axis == "scenario") {
      cfg.axis = SweepAxis::kScenario;
    } else {
      throw std::invalid_argument("config: sweep.axis must be epsilon, n, or scenario");
    }
    if (sweep.contains("grid")) cfg.grid = parse_budget_list(sweep["grid"]);
  }
  if (j.contains("scenarios")) {
    cfg.scenarios.clear();
    for (const json& s : j["scenarios"]) {
      CollabScenario sc;
      sc.id = s.value("id", "");
      sc.owner_sizes = s.at("sizes").get<std::vector<long>>();
      sc.epsilons = parse_budget_list(s.at("budgets"));
      cfg.scenarios.push_back(std::move(sc));
    }
  }
  if (j.contains("synth")) {
    cfg.synth_dim = j["synth"].value("dim", cfg.synth_dim);
    cfg.synth_noise_sd = j["synth"].value("noise_sd", cfg.synth_noise_sd);
  }
  if (j.contains("data_csv")) cfg.data_csv = j["data_csv"].get<std::string>();
  if (j.contains("out_dir")) cfg.out_dir = j["out_dir"].get<std::string>();
  return cfg;
}

ExperimentConfig config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return config_from_json(text);
}

}  // namespace dpcollab
