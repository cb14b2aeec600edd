#ifndef DPCOLLAB_EXPERIMENT_HPP
#define DPCOLLAB_EXPERIMENT_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "dpcollab/pipeline.hpp"
#include "dpcollab/predictor.hpp"
#include "dpcollab/training.hpp"

namespace dpcollab {

enum class SweepAxis { kEpsilon, kN, kScenario };

// Full description of a reproducible experiment: the collaboration shape,
// the training algorithm, the Monte Carlo plan, and the sweep grid.
struct ExperimentConfig {
  LossKind loss_kind = LossKind::kLinearRegression;
  std::vector<int> owner_sizes{2000, 2000, 2000};
  std::vector<double> budgets{1.0, 1.0, 1.0};
  int rounds_t = 100;
  TrainMode mode = TrainMode::kAveragedProjection;
  double rho = 1.0;
  double c1 = 0.0;         // <= 0: default 1 / (lambda_hat + 1)
  double const_step = 0.0; // <= 0: default 1 / lambda_hat
  double theta_max = 1e3;
  double xi_clip = 0.0;    // <= 0: empirical default rule
  double c2 = 0.0;         // <= 0: calibrated from the first grid point
  double slack = 0.0;
  int mc_runs = 100;
  std::uint64_t master_seed = 1;
  SweepAxis axis = SweepAxis::kEpsilon;
  std::vector<double> grid{0.1, 1.0, 10.0};
  std::vector<CollabScenario> scenarios;
  int synth_dim = 5;
  double synth_noise_sd = 0.5;
  std::string data_csv;  // prepped numeric CSV; empty means synthetic data
  std::string out_dir = "out";
};

// Aggregated results of the R runs at one grid point. Percentiles are over
// psi(theta_bar[k]) per round (psi(theta[k]) when no averaging is run).
struct GridPointStats {
  std::string label;
  double grid_value = 0.0;
  long n_total = 0;
  std::vector<double> epsilons;
  std::vector<std::array<double, 3>> round_percentiles;  // {p25, p50, p75}
  double mean_terminal_psi = 0.0;
  int divergent_runs = 0;
  double f_star = 0.0;
  double xi = 0.0;
  BoundForecast forecast;
  bool forecast_assumptions_ok = false;
};

struct RunStatistics {
  std::vector<GridPointStats> points;
  double fitted_slope = 0.0;  // log-log slope of mean psi vs grid value; NaN off numeric axes
};

// Executes the sweep: per grid point derives theta_star once, runs R seeded
// private trainings (run i reseeds the owner streams from master_seed + i),
// aggregates percentile statistics, and attaches the matching forecast.
// Divergent runs are excluded from the statistics and counted.
RunStatistics run_experiment(const ExperimentConfig& cfg);

// One seeded private run: resets every owner's round ledger, reseeds each
// stream from (run_seed, owner id), and trains. A run's noise depends on its
// own seed only, so changing one run's seed leaves every other run intact.
Trajectory seeded_private_run(const LossModel& loss, std::vector<DataOwner>& owners,
                              const TrainConfig& cfg, std::uint64_t run_seed);

// Dataset for one grid point: the prepped CSV when configured, else the
// seeded synthetic instance. Exactly total_n records.
Dataset load_experiment_data(const ExperimentConfig& cfg, int total_n);

// Config resolution shared by the sweep and the single-run CLI path: fills
// the xi default, derives step constants from the curvature estimate, and
// computes the non-private reference model.
struct ResolvedInstance {
  LossModel loss;
  TrainConfig train_cfg;
  std::vector<Dataset> pooled;
  CurvatureEstimate curvature;
  Vec theta_star;
  double f_star = 0.0;
};
ResolvedInstance resolve_instance(const ExperimentConfig& cfg, Dataset data);

// Percentile by linear interpolation between closest ranks on the sorted
// values (fractional index q/100 * (m-1)).
double percentile(std::vector<double> values, double q);

// Ordinary least-squares slope of log10(y) against log10(x).
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

// Writes rounds_<label>.csv per grid point, summary.csv, and forecast.json
// into dir; output is byte-stable for a fixed config and seed.
void emit_results(const RunStatistics& stats, const std::string& dir);

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_file(const std::string& path);

}  // namespace dpcollab

#endif  // DPCOLLAB_EXPERIMENT_HPP
