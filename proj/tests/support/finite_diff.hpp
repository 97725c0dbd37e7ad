// Central-difference gradient checking plus random problem builders shared by
// the unit tests and the acceptance suite.
#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fairfpr/encoder.hpp"
#include "fairfpr/losses.hpp"
#include "fairfpr/matrix.hpp"
#include "fairfpr/rng.hpp"
#include "fairfpr/thresholding.hpp"

namespace fairfpr::testing {

constexpr double kFdStep = 1e-6;

// Relative error with a unit floor so near-zero gradients are compared
// absolutely (central differences bottom out around 1e-9 here).
inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

template <typename Eval>
double central_diff(double& slot, Eval&& eval, double h = kFdStep) {
  const double orig = slot;
  slot = orig + h;
  const double fp = eval();
  slot = orig - h;
  const double fm = eval();
  slot = orig;
  return (fp - fm) / (2.0 * h);
}

template <typename Eval>
double max_grad_err(Matrix& slot_matrix, const Matrix& analytic, Eval&& eval) {
  double worst = 0.0;
  for (std::size_t i = 0; i < slot_matrix.data().size(); ++i) {
    const double fd = central_diff(slot_matrix.data()[i], eval);
    worst = std::max(worst, rel_err(analytic.data()[i], fd));
  }
  return worst;
}

inline Matrix random_unit_rows(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = rng.next_normal();
  return l2_normalize_rows(m);
}

inline std::vector<int> random_labels(Rng& rng, std::size_t n, std::size_t c) {
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.next_u64() % c);
  return labels;
}

inline LogitsBatch random_cosine_batch(Rng& rng, std::size_t n, std::size_t c,
                                       double limit = 0.9) {
  LogitsBatch batch;
  batch.cosines = Matrix(n, c);
  for (double& x : batch.cosines.data()) x = limit * (2.0 * rng.next_unit() - 1.0);
  batch.labels = random_labels(rng, n, c);
  return batch;
}

// A threshold sitting in the widest gap of the central portion of the
// non-target pool, so +-h perturbations anywhere cannot flip the mask.
// Returns the guaranteed margin via *margin_out.
inline ThresholdEstimate margin_threshold(const LogitsBatch& batch, double* margin_out = nullptr) {
  std::vector<double> pool;
  for (std::size_t i = 0; i < batch.batch_size(); ++i)
    for (std::size_t j = 0; j < batch.class_count(); ++j)
      if (j != static_cast<std::size_t>(batch.labels[i])) pool.push_back(batch.cosines(i, j));
  std::sort(pool.begin(), pool.end(), std::greater<>());

  const std::size_t lo = pool.size() / 8;
  const std::size_t hi = pool.size() - pool.size() / 8;
  std::size_t best = lo;
  double best_gap = -1.0;
  for (std::size_t i = lo; i + 1 < hi; ++i) {
    const double gap = pool[i] - pool[i + 1];
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  ThresholdEstimate est;
  est.t_u = 0.5 * (pool[best] + pool[best + 1]);
  est.k = best + 1;
  est.pool_size = pool.size();
  est.gamma_u = static_cast<double>(best + 1) / static_cast<double>(pool.size());
  est.realized_fpr = static_cast<double>(best + 1) / static_cast<double>(pool.size());
  if (margin_out) *margin_out = best_gap / 2.0;
  return est;
}

inline std::optional<ThresholdEstimate> threshold_for(const LossConfig& cfg,
                                                      const LogitsBatch& batch) {
  if (!is_penalty_kind(cfg.kind)) return std::nullopt;
  return margin_threshold(batch);
}

// Full desk-scale pipeline for gradient checks: raw features -> encoder ->
// normalized embeddings -> cosines against normalized weight columns -> loss.
struct PipelineProblem {
  EncoderParams encoder;
  Matrix features;       // n x raw_dim
  Matrix raw_weights;    // embed_dim x c
  std::vector<int> labels;

  double loss(const LossConfig& cfg, const std::optional<ThresholdEstimate>& thr) const {
    const ForwardTrace trace = encoder_forward(encoder, features);
    const LogitsBatch batch =
        cosine_logits(trace.embeddings, l2_normalize_columns(raw_weights), labels);
    return loss_forward(batch, cfg, thr).loss;
  }

  LogitsBatch logits() const {
    const ForwardTrace trace = encoder_forward(encoder, features);
    return cosine_logits(trace.embeddings, l2_normalize_columns(raw_weights), labels);
  }
};

inline PipelineProblem random_pipeline(Rng& rng, std::size_t n, std::size_t raw_dim,
                                       const std::vector<std::size_t>& hidden,
                                       std::size_t embed_dim, std::size_t c) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    PipelineProblem p;
    p.encoder = encoder_init(raw_dim, hidden, embed_dim, rng.next_u64());
    p.features = Matrix(n, raw_dim);
    for (double& x : p.features.data()) x = rng.next_normal();
    p.raw_weights = Matrix(embed_dim, c);
    for (double& x : p.raw_weights.data()) x = rng.next_normal() / std::sqrt(double(embed_dim));
    p.labels = random_labels(rng, n, c);
    try {
      encoder_forward(p.encoder, p.features);  // a row can land all-negative pre-relu
      return p;
    } catch (const std::runtime_error&) {
      continue;
    }
  }
  throw std::runtime_error("random_pipeline: could not draw a non-degenerate problem");
}

}  // namespace fairfpr::testing
