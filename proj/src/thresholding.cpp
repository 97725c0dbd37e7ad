#include "fairfpr/thresholding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "fairfpr/selection.hpp"

namespace fairfpr {

ThresholdEstimate estimate_threshold(const LogitsBatch& batch, double gamma_u) {
  if (!(gamma_u > 0.0 && gamma_u < 1.0))
    throw std::invalid_argument("estimate_threshold: gamma_u must be in (0, 1)");
  validate(batch);

  const std::size_t n = batch.batch_size();
  const std::size_t c = batch.class_count();
  if (n == 0 || c < 2) throw std::invalid_argument("estimate_threshold: empty non-target pool");

  std::vector<double> pool;
  pool.reserve(n * (c - 1));
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = batch.cosines.row(i);
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    for (std::size_t j = 0; j < c; ++j)
      if (j != y) pool.push_back(row[j]);
  }

  ThresholdEstimate est;
  est.pool_size = pool.size();
  est.gamma_u = gamma_u;
  const double raw_k = std::ceil(gamma_u * static_cast<double>(pool.size()));
  est.k = std::clamp<std::size_t>(static_cast<std::size_t>(raw_k), 1, pool.size());
  est.t_u = kth_largest_inplace(pool, est.k);

  std::size_t above = 0;
  for (double x : pool)
    if (x > est.t_u) ++above;
  est.realized_fpr = static_cast<double>(above) / static_cast<double>(pool.size());
  return est;
}

double smoothed_threshold(std::optional<double> previous, const ThresholdEstimate& current,
                          double momentum) {
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw std::invalid_argument("smoothed_threshold: momentum must be in [0, 1)");
  if (momentum == 0.0 || !previous.has_value()) return current.t_u;
  return momentum * *previous + (1.0 - momentum) * current.t_u;
}

}  // namespace fairfpr
