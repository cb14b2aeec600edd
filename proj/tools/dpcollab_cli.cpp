// Command-line harness: train once, sweep a grid, forecast collaborations,
// or prep a raw CSV into owner shards.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "dpcollab/experiment.hpp"
#include "dpcollab/pipeline.hpp"
#include "dpcollab/predictor.hpp"
#include "dpcollab/training.hpp"
#include "dpcollab/wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dpcollab;

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  bool fast = false;
};

ExperimentConfig load_config(const CommonArgs& args) {
  ExperimentConfig cfg = config_from_file(args.config_path);
  if (args.seed) cfg.master_seed = *args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.fast) cfg.mc_runs = std::min(cfg.mc_runs, 50);
  return cfg;
}

int cmd_train(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  int total_n = 0;
  for (int s : cfg.owner_sizes) total_n += s;
  const ResolvedInstance inst = resolve_instance(cfg, load_experiment_data(cfg, total_n));

  fs::create_directories(cfg.out_dir);
  const fs::path csv_path = fs::path(cfg.out_dir) / "trajectory.csv";
  std::ofstream out(csv_path);
  if (cfg.mode == TrainMode::kNonPrivateConstant) {
    Trajectory traj;
    traj.theta.push_back(inst.theta_star);
    write_trajectory_csv(out, inst.loss, inst.pooled, traj, inst.f_star);
  } else {
    std::vector<Dataset> shards = partition(inst.pooled.front(), cfg.owner_sizes);
    std::vector<DataOwner> owners;
    for (std::size_t i = 0; i < shards.size(); ++i) {
      owners.push_back(make_owner(static_cast<int>(i), inst.loss, std::move(shards[i]),
                                  cfg.budgets[i], cfg.rounds_t, 0));
    }
    const Trajectory traj = seeded_private_run(inst.loss, owners, inst.train_cfg, cfg.master_seed);
    write_trajectory_csv(out, inst.loss, inst.pooled, traj, inst.f_star);
  }
  std::cout << "wrote " << csv_path.string() << "\n";
  return 0;
}

int cmd_sweep(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  const RunStatistics stats = run_experiment(cfg);
  emit_results(stats, cfg.out_dir);
  std::cout << "grid points: " << stats.points.size() << "\n";
  for (const GridPointStats& p : stats.points) {
    std::cout << "  " << p.label << ": mean psi = " << p.mean_terminal_psi
              << " (divergent runs: " << p.divergent_runs << ")\n";
  }
  if (stats.fitted_slope == stats.fitted_slope) {
    std::cout << "fitted log-log slope: " << stats.fitted_slope << "\n";
  }
  std::cout << "results in " << cfg.out_dir << "\n";
  return 0;
}

int cmd_forecast(const CommonArgs& args) {
  const ExperimentConfig cfg = load_config(args);
  if (cfg.scenarios.empty()) {
    throw std::invalid_argument("forecast: config has no scenarios");
  }
  // Rank order is invariant to c2 and xi; defaults of 1 serve when the
  // caller has not calibrated them.
  const double c2 = cfg.c2 > 0.0 ? cfg.c2 : 1.0;
  const double xi = cfg.xi_clip > 0.0 ? cfg.xi_clip : 1.0;
  const bool assumptions_ok = cfg.loss_kind == LossKind::kLinearRegression;
  const std::vector<RankedScenario> ranked = scenario_rank(cfg.scenarios, c2, xi);

  json report = json::array();
  for (const RankedScenario& r : ranked) {
    report.push_back(json::parse(forecast_report_json(r, assumptions_ok)));
  }
  fs::create_directories(cfg.out_dir);
  const fs::path path = fs::path(cfg.out_dir) / "forecast.json";
  std::ofstream out(path);
  out << report.dump(2) << "\n";
  std::cout << "wrote " << path.string() << "\n";
  return 0;
}

int cmd_prep(const CommonArgs& args) {
  std::ifstream in(args.config_path);
  if (!in) throw std::runtime_error("cannot open config " + args.config_path);
  const json j = json::parse(in);
  if (!j.contains("prep")) throw std::invalid_argument("prep: config needs a 'prep' section");
  const json& p = j["prep"];

  const std::string input_csv = p.at("input_csv").get<std::string>();
  const std::string target = p.at("target_column").get<std::string>();
  const auto features = p.at("feature_columns").get<std::vector<std::string>>();
  const auto categoricals = p.value("categorical_columns", std::vector<std::string>{});
  const int pca_k = p.value("pca_k", 10);
  const std::size_t fit_last = p.value("pca_fit_last", std::size_t{10000});
  const bool standardize = p.value("standardize", true);
  const auto sizes = p.value("owner_sizes", std::vector<int>{});
  std::string out_dir = args.out_dir.empty() ? j.value("out_dir", std::string("out")) : args.out_dir;

  RawTable table = load_csv(input_csv, target, features);
  table = encode_categoricals(std::move(table), features);
  Dataset data = table_to_dataset(table, target);

  // Fit everything on the trailing records only; the basis is the common
  // dictionary shared with the owners.
  const std::size_t fit_begin = data.size() > fit_last ? data.size() - fit_last : 0;
  if (standardize) {
    const Standardizer std_map = standardize_fit(data, fit_begin, data.size());
    data = standardize_apply(std_map, data);
  }
  const int k = std::min<int>(pca_k, static_cast<int>(data.feature_dim()));
  const PcaBasis basis = pca_fit(data, k, fit_begin, data.size());
  data = pca_transform(basis, data);

  fs::create_directories(out_dir);
  {
    std::ofstream basis_out(fs::path(out_dir) / "pca_basis.json");
    basis_out << pca_basis_to_json(basis) << "\n";
  }

  const auto write_shard = [&](const fs::path& path, const Dataset& shard) {
    std::ofstream out(path);
    for (int c = 0; c < k; ++c) out << "x" << c << ",";
    out << "y\n";
    char buf[40];
    for (const Record& r : shard.records) {
      for (double v : r.x) {
        std::snprintf(buf, sizeof buf, "%.12g,", v);
        out << buf;
      }
      std::snprintf(buf, sizeof buf, "%.12g\n", r.y);
      out << buf;
    }
  };

  json summary;
  summary["records"] = data.size();
  summary["features"] = k;
  if (sizes.empty()) {
    write_shard(fs::path(out_dir) / "prepped.csv", data);
    summary["files"] = {"prepped.csv"};
  } else {
    const std::vector<Dataset> shards = partition(data, sizes);
    json files = json::array();
    for (std::size_t i = 0; i < shards.size(); ++i) {
      const std::string name = "owner_" + std::to_string(i) + ".csv";
      write_shard(fs::path(out_dir) / name, shards[i]);
      files.push_back(name);
    }
    summary["files"] = files;
  }
  std::ofstream summary_out(fs::path(out_dir) / "prep_summary.json");
  summary_out << summary.dump(2) << "\n";
  std::cout << "wrote prep outputs to " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-aware collaborative training of convex models with DP gradient queries"};
  app.require_subcommand(1);

  CommonArgs args;
  const auto add_common = [&](CLI::App* sub, bool need_config = true) {
    auto* opt = sub->add_option("--config", args.config_path, "JSON experiment config");
    if (need_config) opt->required();
    sub->add_option("--seed", args.seed, "override master seed");
    sub->add_option("--out", args.out_dir, "output directory");
    sub->add_flag("--fast", args.fast, "cap Monte Carlo runs at 50");
  };

  CLI::App* train = app.add_subcommand("train", "single training run, exports trajectory CSV");
  add_common(train);
  CLI::App* sweep = app.add_subcommand("sweep", "Monte Carlo sweep with percentile statistics");
  add_common(sweep);
  CLI::App* forecast = app.add_subcommand("forecast", "rank collaboration scenarios by bound");
  add_common(forecast);
  CLI::App* prep = app.add_subcommand("prep", "CSV ingestion, encoding, PCA, partitioning");
  add_common(prep);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(args);
    if (sweep->parsed()) return cmd_sweep(args);
    if (forecast->parsed()) return cmd_forecast(args);
    if (prep->parsed()) return cmd_prep(args);
  } catch (const std::exception& e) {
    json err;
    err["error"] = e.what();
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
