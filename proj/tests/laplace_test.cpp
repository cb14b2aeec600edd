#include "dpcollab/laplace.hpp"

#include <cmath>
#include <random>

#include <stdexcept>

#include "doctest.h"
#include "dpcollab/federation.hpp"

using namespace dpcollab;

TEST_CASE("noise scale follows the calibration formula") {
  CHECK(noise_scale(1.0, 100, 1000, 1.0) == doctest::Approx(0.2));
  CHECK(noise_scale(2.0, 50, 100, 0.1) == doctest::Approx(20.0));
  CHECK(noise_scale(1.0, 100, 1000, std::numeric_limits<double>::infinity()) == 0.0);
  CHECK_THROWS_AS(noise_scale(0.0, 100, 1000, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(noise_scale(1.0, 0, 1000, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(noise_scale(1.0, 100, 1000, -1.0), std::invalid_argument);
}

TEST_CASE("sensitivity bound formula") {
  CHECK(l1_sensitivity_bound(1.0, 50) == doctest::Approx(0.04));
  CHECK(l1_sensitivity_bound(3.0, 3) == doctest::Approx(2.0));
  CHECK(l1_sensitivity_bound(1.0, 100) == doctest::Approx(0.5 * l1_sensitivity_bound(1.0, 50)));
}

TEST_CASE("laplace sampler degenerate and determinism cases") {
  NoiseStream a(7);
  const Vec zero = sample_laplace_vector({0.0, 5}, a);
  CHECK(zero == Vec(5, 0.0));

  NoiseStream fresh1(12345), fresh2(12345);
  const NoiseSpec spec{1.0, 8};
  CHECK(sample_laplace_vector(spec, fresh1) == sample_laplace_vector(spec, fresh2));

  NoiseStream distinct(54321);
  CHECK(sample_laplace_vector(spec, fresh1) != sample_laplace_vector(spec, distinct));
}

TEST_CASE("laplace moments match the analytic distribution") {
  const double b = 0.2;
  NoiseStream stream(2024);
  const int draws = 1000000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double w = stream.laplace(b);
    sum += w;
    sum_sq += w * w;
  }
  const double mean = sum / draws;
  const double var = sum_sq / draws - mean * mean;
  CHECK(std::abs(mean) < 0.002);
  CHECK(std::abs(var - 2.0 * b * b) / (2.0 * b * b) < 0.02);
}

TEST_CASE("privatize adds calibrated noise") {
  NoiseStream s(99);
  const Vec q{1.0, -2.0, 3.0};
  CHECK(privatize(q, {0.0, 3}, s) == q);

  // additivity: with q = 0 the output is the raw noise vector for that seed
  NoiseStream s1(5), s2(5);
  const NoiseSpec spec{1.0, 3};
  const Vec noise = sample_laplace_vector(spec, s1);
  const Vec out = privatize(Vec{0.0, 0.0, 0.0}, spec, s2);
  CHECK(out == noise);

  CHECK_THROWS_AS(privatize(q, {1.0, 2}, s), std::invalid_argument);
}

TEST_CASE("privatize is unbiased") {
  const Vec q{0.7, -1.3};
  const NoiseSpec spec{0.2, 2};
  NoiseStream s(31);
  Vec mean(2, 0.0);
  const int runs = 100000;
  for (int i = 0; i < runs; ++i) {
    const Vec out = privatize(q, spec, s);
    mean[0] += out[0];
    mean[1] += out[1];
  }
  CHECK(std::abs(mean[0] / runs - q[0]) < 0.01);
  CHECK(std::abs(mean[1] / runs - q[1]) < 0.01);
}

TEST_CASE("empirical sensitivity never exceeds the bound") {
  // 1000 random adjacent pairs, one-record replacement at fixed n, clip active.
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> unif(-3.0, 3.0);
  const int n_l = 50;
  const double xi = 1.0;
  LossModel loss{LossKind::kLinearRegression, std::numeric_limits<double>::infinity(), xi};
  const double bound = l1_sensitivity_bound(xi, n_l);

  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Dataset d;
    for (int i = 0; i < n_l; ++i) {
      d.records.push_back({{unif(rng), unif(rng)}, unif(rng)});
    }
    Dataset d_adj = d;
    d_adj.records[static_cast<std::size_t>(rng() % n_l)] = {{unif(rng), unif(rng)}, unif(rng)};

    const Vec theta{unif(rng), unif(rng)};
    DataOwner a = make_owner(0, loss, d, 1.0, 10, 1);
    DataOwner b = make_owner(1, loss, d_adj, 1.0, 10, 2);
    const Vec qa = owner_compute_query(a, theta);
    const Vec qb = owner_compute_query(b, theta);
    Vec diff(qa.size());
    for (std::size_t i = 0; i < qa.size(); ++i) diff[i] = qa[i] - qb[i];
    if (l1_norm(diff) > bound + 1e-12) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("noise streams of distinct owners are uncorrelated") {
  NoiseStream a(1001), b(1002);
  const int m = 100000;
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (int i = 0; i < m; ++i) {
    const double x = a.laplace(1.0);
    const double y = b.laplace(1.0);
    sa += x;
    sb += y;
    saa += x * x;
    sbb += y * y;
    sab += x * y;
  }
  const double cov = sab / m - (sa / m) * (sb / m);
  const double corr = cov / std::sqrt((saa / m - (sa / m) * (sa / m)) *
                                      (sbb / m - (sb / m) * (sb / m)));
  CHECK(std::abs(corr) < 0.01);
}

TEST_CASE("aggregate noise variance matches the weighted sum of owner variances") {
  // E |(1/n) sum n_l w_l|_2^2 against the dimension-explicit form
  // p * (1/n^2) * sum 2 b_l^2 n_l^2.
  const int p = 4;
  const std::vector<int> sizes{100, 300, 600};
  const std::vector<double> scales{0.5, 0.2, 0.1};
  const double n = 1000.0;
  double expected = 0.0;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    expected += 2.0 * scales[l] * scales[l] * sizes[l] * sizes[l];
  }
  expected *= static_cast<double>(p) / (n * n);

  std::vector<NoiseStream> streams;
  for (std::size_t l = 0; l < sizes.size(); ++l) streams.emplace_back(4000 + l);
  const int trials = 20000;
  double acc = 0.0;
  for (int t = 0; t < trials; ++t) {
    Vec w(p, 0.0);
    for (std::size_t l = 0; l < sizes.size(); ++l) {
      for (int i = 0; i < p; ++i) {
        w[static_cast<std::size_t>(i)] +=
            sizes[l] / n * streams[l].laplace(scales[l]);
      }
    }
    acc += dot(w, w);
  }
  const double measured = acc / trials;
  CHECK(std::abs(measured - expected) / expected < 0.05);
}
