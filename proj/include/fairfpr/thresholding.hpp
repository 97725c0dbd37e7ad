#pragma once

#include <cstddef>
#include <optional>

#include "fairfpr/logits_batch.hpp"

namespace fairfpr {

/// Unified threshold for a target overall FPR, estimated from the pool of
/// non-target cosines of one mini-batch.
struct ThresholdEstimate {
  double t_u = 0.0;
  std::size_t k = 0;          // order-statistic index actually used
  std::size_t pool_size = 0;  // n_b * (c - 1)
  double gamma_u = 0.0;       // requested overall FPR
  double realized_fpr = 0.0;  // fraction of pool strictly above t_u
};

/// t_u = k-th largest non-target cosine with k = ceil(gamma_u * pool size),
/// clamped to [1, pool size]. The clamp-to-1 case yields the pool maximum
/// and zero realized FPR.
ThresholdEstimate estimate_threshold(const LogitsBatch& batch, double gamma_u);

/// Exponential moving average over iterations; momentum 0 returns the
/// current estimate unchanged.
double smoothed_threshold(std::optional<double> previous, const ThresholdEstimate& current,
                          double momentum);

}  // namespace fairfpr
