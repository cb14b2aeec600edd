#include "dpcollab/predictor.hpp"

#include <cmath>
#include <random>

#include <stdexcept>

#include "doctest.h"
#include "json.hpp"

using namespace dpcollab;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Characteristic-polynomial oracle for a small symmetric PSD matrix:
// Faddeev-LeVerrier coefficients, then root isolation by sign changes of
// p(x) on a fine grid and bisection. Independent of power iteration.
Vec charpoly_eigenvalues(const Mat& a) {
  const std::size_t n = a.size();
  // c[0] x^n + c[1] x^(n-1) + ... + c[n]
  Vec c(n + 1, 0.0);
  c[0] = 1.0;
  Mat m = zeros(n, n);
  for (std::size_t step = 1; step <= n; ++step) {
    // m = a * (m + c[step-1] I)
    Mat prev = m;
    for (std::size_t i = 0; i < n; ++i) prev[i][i] += c[step - 1];
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += a[i][k] * prev[k][j];
        m[i][j] = s;
      }
    }
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) trace += m[i][i];
    c[step] = -trace / static_cast<double>(step);
  }
  const auto poly = [&](double x) {
    double v = 0.0;
    for (double coeff : c) v = v * x + coeff;
    return v;
  };
  double trace_a = 0.0;
  for (std::size_t i = 0; i < n; ++i) trace_a += a[i][i];
  const double hi = trace_a + 1.0;

  Vec roots;
  const int grid = 200000;
  double prev_x = -1e-9, prev_v = poly(prev_x);
  for (int g = 1; g <= grid; ++g) {
    const double x = hi * static_cast<double>(g) / grid;
    const double v = poly(x);
    if ((prev_v <= 0.0 && v > 0.0) || (prev_v >= 0.0 && v < 0.0)) {
      double lo_x = prev_x, hi_x = x, lo_v = prev_v;
      for (int it = 0; it < 100; ++it) {
        const double mid = 0.5 * (lo_x + hi_x);
        const double mv = poly(mid);
        if ((lo_v <= 0.0) == (mv <= 0.0)) {
          lo_x = mid;
          lo_v = mv;
        } else {
          hi_x = mid;
        }
      }
      roots.push_back(0.5 * (lo_x + hi_x));
    }
    prev_x = x;
    prev_v = v;
  }
  return roots;
}

Dataset gram_dataset(const std::vector<Vec>& rows, double y = 0.0) {
  Dataset d;
  for (const Vec& row : rows) d.records.push_back({row, y});
  return d;
}

}  // namespace

TEST_CASE("curvature of an identity-Hessian instance") {
  // rows e1, e2 with n = 2: Hessian (2/2) X'X = I
  const Dataset d = gram_dataset({{1.0, 0.0}, {0.0, 1.0}});
  const CurvatureEstimate est =
      estimate_curvature({LossKind::kLinearRegression, kInf, 1.0}, {{d}});
  CHECK(est.strong_convexity == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(est.grad_lipschitz == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(est.rank_deficient);
}

TEST_CASE("feature scaling acts quadratically on the Lipschitz constant") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<Vec> rows;
  for (int i = 0; i < 40; ++i) rows.push_back({unif(rng), unif(rng), unif(rng)});
  const Dataset d = gram_dataset(rows);
  std::vector<Vec> scaled_rows = rows;
  for (Vec& r : scaled_rows) {
    for (double& x : r) x *= 2.0;
  }
  const Dataset d2 = gram_dataset(scaled_rows);
  const LossModel loss{LossKind::kLinearRegression, kInf, 1.0};
  const CurvatureEstimate base = estimate_curvature(loss, {{d}});
  const CurvatureEstimate scaled = estimate_curvature(loss, {{d2}});
  CHECK(scaled.grad_lipschitz == doctest::Approx(4.0 * base.grad_lipschitz).epsilon(1e-6));
  CHECK(base.strong_convexity <= base.grad_lipschitz);
}

TEST_CASE("SVM curvature pins L to the regularizer") {
  const Dataset d = gram_dataset({{1.0, 2.0}, {0.5, -1.0}}, 1.0);
  const CurvatureEstimate est = estimate_curvature({LossKind::kLinearSvm, kInf, 1.0}, {{d}});
  CHECK(est.strong_convexity == doctest::Approx(1.0));
  CHECK(est.grad_lipschitz > 1.0);
}

TEST_CASE("rank-deficient regression reports L = 0 with the flag") {
  const Dataset d = gram_dataset({{1.0, 1.0}, {2.0, 2.0}});
  const CurvatureEstimate est =
      estimate_curvature({LossKind::kLinearRegression, kInf, 1.0}, {{d}});
  CHECK(est.rank_deficient);
  CHECK(est.strong_convexity == 0.0);
}

TEST_CASE("power iteration agrees with the characteristic-polynomial oracle") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    // random 5x5 Gram from 12 random rows
    std::vector<Vec> rows;
    for (int i = 0; i < 12; ++i) {
      rows.push_back({unif(rng), unif(rng), unif(rng), unif(rng), unif(rng)});
    }
    const std::size_t n = 12, p = 5;
    Mat gram = zeros(p, p);
    for (const Vec& r : rows) {
      for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) gram[i][j] += 2.0 / n * r[i] * r[j];
      }
    }
    const Vec roots = charpoly_eigenvalues(gram);
    REQUIRE(roots.size() == p);

    const Dataset d = gram_dataset(rows);
    const CurvatureEstimate est =
        estimate_curvature({LossKind::kLinearRegression, kInf, 1.0}, {{d}});
    CHECK(std::abs(est.grad_lipschitz - roots.back()) < 1e-6);
    CHECK(std::abs(est.strong_convexity - roots.front()) < 1e-6);
  }
}

TEST_CASE("smooth-case bound formulas") {
  const std::vector<double> eps{1.0, 1.0};
  const BoundForecast f = smooth_case_bounds(1.0, 1.0, 2.0, 10, eps, 0.0);
  CHECK(f.fitness_gap_bound == doctest::Approx(0.08));
  REQUIRE(f.distance_bound.has_value());
  CHECK(*f.distance_bound == doctest::Approx(0.16));

  // infinite budget drops its term
  const std::vector<double> with_inf{1.0, kInf};
  const BoundForecast g = smooth_case_bounds(1.0, 1.0, 2.0, 10, with_inf, 0.0);
  CHECK(g.fitness_gap_bound == doctest::Approx(0.04));

  CHECK_THROWS_AS(smooth_case_bounds(1.0, 1.0, 0.0, 10, eps, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(smooth_case_bounds(1.0, 1.0, 2.0, 0, eps, 0.0), std::invalid_argument);
}

TEST_CASE("averaged-case bound formulas") {
  const std::vector<double> eps{1.0, 1.0};
  const BoundForecast f = averaged_case_bounds(1.0, 1.0, 1.0, 10, eps);
  CHECK(f.fitness_gap_bound == doctest::Approx(std::sqrt(2.0) / 10.0));
  REQUIRE(f.distance_bound.has_value());
  CHECK(*f.distance_bound == doctest::Approx(4.0 * f.fitness_gap_bound));

  const BoundForecast no_l = averaged_case_bounds(1.0, 1.0, std::nullopt, 10, eps);
  CHECK_FALSE(no_l.distance_bound.has_value());

  // growing n strictly shrinks the bound
  const BoundForecast bigger = averaged_case_bounds(1.0, 1.0, std::nullopt, 25, eps);
  CHECK(bigger.fitness_gap_bound < no_l.fitness_gap_bound);
}

TEST_CASE("bounds are monotone in each budget and in n") {
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> unif(0.1, 10.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> eps{unif(rng), unif(rng), unif(rng)};
    const long n = 10 + static_cast<long>(rng() % 1000);
    const BoundForecast base = smooth_case_bounds(1.0, 1.0, 1.0, n, eps, 0.0);
    const BoundForecast base3 = averaged_case_bounds(1.0, 1.0, 1.0, n, eps);

    std::vector<double> eps_up = eps;
    eps_up[rng() % 3] *= 1.5;
    CHECK(smooth_case_bounds(1.0, 1.0, 1.0, n, eps_up, 0.0).fitness_gap_bound <=
          base.fitness_gap_bound);
    CHECK(averaged_case_bounds(1.0, 1.0, 1.0, n, eps_up).fitness_gap_bound <=
          base3.fitness_gap_bound);

    CHECK(smooth_case_bounds(1.0, 1.0, 1.0, n + 50, eps, 0.0).fitness_gap_bound <
          base.fitness_gap_bound);
    CHECK(averaged_case_bounds(1.0, 1.0, 1.0, n + 50, eps).fitness_gap_bound <
          base3.fitness_gap_bound);
  }
}

TEST_CASE("dataset-size ratio laws are exact") {
  const std::vector<double> eps{0.7, 1.3, 4.0};
  const double smooth_small = smooth_case_bounds(2.0, 1.5, 1.0, 100, eps, 0.0).fitness_gap_bound;
  const double smooth_large =
      smooth_case_bounds(2.0, 1.5, 1.0, 1000, eps, 0.0).fitness_gap_bound;
  CHECK(smooth_small / smooth_large == doctest::Approx(100.0).epsilon(1e-12));

  const double avg_small = averaged_case_bounds(2.0, 1.5, 1.0, 100, eps).fitness_gap_bound;
  const double avg_large = averaged_case_bounds(2.0, 1.5, 1.0, 1000, eps).fitness_gap_bound;
  CHECK(avg_small / avg_large == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("scenario ranking prefers large eager collaborations") {
  std::vector<CollabScenario> scenarios;
  scenarios.push_back({"small_conservative", {1000, 1000, 1000}, {0.1, 0.1, 0.1}});
  scenarios.push_back({"large_eager", {100000, 100000, 100000}, {10.0, 10.0, 10.0}});
  const std::vector<RankedScenario> ranked = scenario_rank(scenarios, 1.0, 1.0);
  CHECK(ranked[0].scenario.id == "large_eager");
  CHECK(ranked[1].scenario.id == "small_conservative");

  // identical scenarios keep their input order
  std::vector<CollabScenario> ties;
  ties.push_back({"first", {10, 10}, {1.0, 1.0}});
  ties.push_back({"second", {10, 10}, {1.0, 1.0}});
  const std::vector<RankedScenario> tied = scenario_rank(ties, 1.0, 1.0);
  CHECK(tied[0].scenario.id == "first");
  CHECK(tied[1].scenario.id == "second");

  CHECK_THROWS_AS(scenario_rank(std::vector<CollabScenario>{}, 1.0, 1.0), std::invalid_argument);
}

TEST_CASE("conservative partners put a floor under the bound") {
  // two owners stuck at eps = 0.1 keep sum 1/eps^2 >= 200 no matter how
  // eager the first owner becomes
  const long n = 3000;
  const double floor_bound =
      averaged_case_bounds(1.0, 1.0, std::nullopt, n, std::vector<double>{kInf, 0.1, 0.1})
          .fitness_gap_bound;
  CHECK(floor_bound == doctest::Approx(std::sqrt(200.0) / n));
  for (const double eps1 : {0.1, 1.0, 10.0, 1000.0}) {
    const double b =
        averaged_case_bounds(1.0, 1.0, std::nullopt, n, std::vector<double>{eps1, 0.1, 0.1})
            .fitness_gap_bound;
    CHECK(b > floor_bound);
    CHECK(b >= std::sqrt(200.0) / n);
  }
}

TEST_CASE("forecast report JSON carries the scenario fields") {
  std::vector<CollabScenario> scenarios;
  scenarios.push_back({"s1", {100, 200}, {1.0, kInf}});
  const std::vector<RankedScenario> ranked = scenario_rank(scenarios, 2.0, 1.5);
  const nlohmann::json j = nlohmann::json::parse(forecast_report_json(ranked[0], true));
  CHECK(j["scenario_id"] == "s1");
  CHECK(j["n_total"] == 300);
  CHECK(j["assumptions_ok"] == true);
  CHECK(j["epsilons"][0] == 1.0);
  CHECK(j["epsilons"][1] == "inf");
  CHECK(j["fitness_bound"].get<double>() == doctest::Approx(2.0 * 1.5 / 300.0 * 1.0));
}

TEST_CASE("c2 calibration inverts the averaged bound") {
  const std::vector<double> eps{1.0, 1.0, 1.0};
  const double c2 = calibrate_c2(0.5, 2.0, 1.0, 600, eps);
  const BoundForecast f = averaged_case_bounds(1.0, c2, std::nullopt, 600, eps);
  CHECK(f.fitness_gap_bound / 2.0 == doctest::Approx(0.5));
}
