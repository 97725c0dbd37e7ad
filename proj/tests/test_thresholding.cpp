#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "fairfpr/rng.hpp"
#include "fairfpr/thresholding.hpp"
#include "support/oracles.hpp"

using namespace fairfpr;
using namespace fairfpr::testing;

namespace {

// One-row batch whose non-target pool is exactly `pool`.
LogitsBatch batch_with_pool(const std::vector<double>& pool, double target = 0.95) {
  LogitsBatch b;
  b.cosines = Matrix(1, pool.size() + 1);
  b.cosines(0, 0) = target;
  for (std::size_t j = 0; j < pool.size(); ++j) b.cosines(0, j + 1) = pool[j];
  b.labels = {0};
  return b;
}

}  // namespace

TEST_CASE("estimate_threshold: hand-evaluated ceiling and order statistic") {
  std::vector<double> pool;
  for (int i = 9; i >= 0; --i) pool.push_back(0.1 * i);  // 0.9 .. 0.0
  const ThresholdEstimate est = estimate_threshold(batch_with_pool(pool), 0.2);
  CHECK(est.k == 2);
  CHECK(est.t_u == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(est.pool_size == 10);
  CHECK(est.realized_fpr == doctest::Approx(0.1).epsilon(1e-15));
}

TEST_CASE("estimate_threshold: tiny gamma clamps k to 1") {
  const ThresholdEstimate est = estimate_threshold(batch_with_pool({0.4, 0.1, 0.7, -0.2}), 1e-6);
  CHECK(est.k == 1);
  CHECK(est.t_u == 0.7);
  CHECK(est.realized_fpr == 0.0);
}

TEST_CASE("estimate_threshold: pool excludes the target column") {
  LogitsBatch b;
  b.cosines = Matrix::from_rows({{0.99, 0.1, 0.2}, {0.3, 0.98, -0.1}});
  b.labels = {0, 1};
  const ThresholdEstimate est = estimate_threshold(b, 0.3);
  CHECK(est.pool_size == 4);
  // pool = {0.1, 0.2, 0.3, -0.1}; k = ceil(1.2) = 2 -> second largest
  CHECK(est.t_u == doctest::Approx(0.2));
}

TEST_CASE("estimate_threshold: argument errors") {
  CHECK_THROWS_AS(estimate_threshold(batch_with_pool({0.1}), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(estimate_threshold(batch_with_pool({0.1}), 1.0), std::invalid_argument);
  LogitsBatch single;
  single.cosines = Matrix(1, 1, 0.5);
  single.labels = {0};
  CHECK_THROWS_AS(estimate_threshold(single, 0.1), std::invalid_argument);
}

TEST_CASE("estimate_threshold: full-sort oracle, granularity, monotonicity") {
  Rng rng(55);
  for (int rep = 0; rep < 25; ++rep) {
    const std::size_t n = 2 + rng.next_u64() % 5000;
    std::vector<double> pool(n);
    for (double& x : pool) x = 2.0 * rng.next_unit() - 1.0;
    const double gamma = std::pow(10.0, -(1.0 + 4.0 * rng.next_unit()));  // 1e-5..1e-1
    const LogitsBatch b = batch_with_pool(pool);
    const ThresholdEstimate est = estimate_threshold(b, gamma);

    const auto k = static_cast<std::size_t>(
        std::clamp(std::ceil(gamma * double(n)), 1.0, double(n)));
    CHECK(est.k == k);
    CHECK(est.t_u == sorted_kth_largest(pool, k));
    CHECK(est.realized_fpr <= gamma + 1.0 / double(n));

    // all-distinct pools: realized == (k-1)/pool
    std::set<double> uniq(pool.begin(), pool.end());
    if (uniq.size() == pool.size())
      CHECK(est.realized_fpr == doctest::Approx(double(k - 1) / double(n)).epsilon(1e-15));

    const ThresholdEstimate wider = estimate_threshold(b, std::min(0.999, gamma * 10));
    CHECK(est.t_u >= wider.t_u);  // smaller gamma, higher threshold
  }
}

TEST_CASE("smoothed_threshold: identity, midpoint, convergence") {
  ThresholdEstimate cur;
  cur.t_u = 0.6;
  CHECK(smoothed_threshold(std::nullopt, cur, 0.0) == 0.6);
  CHECK(smoothed_threshold(0.4, cur, 0.0) == 0.6);
  CHECK(smoothed_threshold(0.4, cur, 0.5) == doctest::Approx(0.5));

  // Stream starting empty: the first estimate is adopted as-is, so a
  // constant stream sits at its value from step one onward.
  std::optional<double> t;
  ThresholdEstimate c2;
  c2.t_u = 0.37;
  for (int i = 0; i < 50; ++i) t = smoothed_threshold(t, c2, 0.9);
  CHECK(std::abs(*t - 0.37) < 1e-6);

  // Seeded with a wrong value, the error decays as a geometric series.
  double drift = 0.0;
  for (int i = 0; i < 50; ++i) drift = smoothed_threshold(drift, c2, 0.9);
  CHECK(std::abs(drift - 0.37) == doctest::Approx(0.37 * std::pow(0.9, 50)).epsilon(1e-9));

  CHECK_THROWS_AS(smoothed_threshold(0.1, cur, 1.0), std::invalid_argument);
}
