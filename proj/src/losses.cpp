#include "fairfpr/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace fairfpr {

namespace {

constexpr double kArcClamp = 1e-7;  // keeps d(acos)/dz finite at the ends

double arcface_target(double z, double m) {
  const double zc = std::clamp(z, -1.0 + kArcClamp, 1.0 - kArcClamp);
  return std::cos(std::acos(zc) + m);
}

double arcface_target_derivative(double z, double m) {
  const double zc = std::clamp(z, -1.0 + kArcClamp, 1.0 - kArcClamp);
  const double theta = std::acos(zc);
  return std::sin(theta + m) / std::sin(theta);
}

double fp_weight(double z, double p, bool signed_form) {
  if (!signed_form) return std::pow(z, p);
  const double mag = std::pow(std::abs(z), p);
  return z < 0.0 ? -mag : mag;
}

double fp_weight_derivative(double z, double p, bool signed_form) {
  if (p == 1.0) return 1.0;
  return signed_form ? p * std::pow(std::abs(z), p - 1.0) : p * std::pow(z, p - 1.0);
}

}  // namespace

bool is_penalty_kind(LossKind kind) {
  return kind == LossKind::FprPenaltyCosFace || kind == LossKind::FprPenaltyArcFace;
}

bool is_arcface_kind(LossKind kind) {
  return kind == LossKind::ArcFace || kind == LossKind::FprPenaltyArcFace;
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "plain-softmax") return LossKind::PlainSoftmax;
  if (name == "cosface") return LossKind::CosFace;
  if (name == "arcface") return LossKind::ArcFace;
  if (name == "fpr-penalty-cosface") return LossKind::FprPenaltyCosFace;
  if (name == "fpr-penalty-arcface") return LossKind::FprPenaltyArcFace;
  throw std::invalid_argument("unknown loss kind '" + name + "'");
}

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::PlainSoftmax: return "plain-softmax";
    case LossKind::CosFace: return "cosface";
    case LossKind::ArcFace: return "arcface";
    case LossKind::FprPenaltyCosFace: return "fpr-penalty-cosface";
    case LossKind::FprPenaltyArcFace: return "fpr-penalty-arcface";
  }
  throw std::invalid_argument("unknown loss kind");
}

void validate(const LossConfig& cfg) {
  if (!(cfg.s > 0.0)) throw std::invalid_argument("loss config: s must be > 0");
  if (is_arcface_kind(cfg.kind)) {
    if (!(cfg.m >= 0.0 && cfg.m < std::numbers::pi / 2.0))
      throw std::invalid_argument("loss config: arcface margin must be in [0, pi/2)");
  } else if (cfg.kind != LossKind::PlainSoftmax) {
    if (!(cfg.m >= 0.0 && cfg.m < 1.0))
      throw std::invalid_argument("loss config: cosface margin must be in [0, 1)");
  }
  if (!(cfg.gamma_u > 0.0 && cfg.gamma_u < 1.0))
    throw std::invalid_argument("loss config: gamma_u must be in (0, 1)");
  if (!(cfg.p >= 1.0)) throw std::invalid_argument("loss config: p must be >= 1");
  if (!(cfg.alpha >= 0.0)) throw std::invalid_argument("loss config: alpha must be >= 0");
}

PenaltyState instance_fpr(const LogitsBatch& batch, const ThresholdEstimate& threshold, double p) {
  validate(batch);
  const std::size_t n = batch.batch_size();
  const std::size_t c = batch.class_count();
  if (c < 2) throw std::invalid_argument("instance_fpr: need at least 2 classes");
  if (!std::isfinite(threshold.t_u)) throw std::invalid_argument("instance_fpr: non-finite t_u");

  const bool signed_form = !(threshold.t_u > 0.0);
  PenaltyState state;
  state.threshold = threshold;
  state.mask.assign(n * c, 0);
  state.instance_fpr.assign(n, 0.0);
  state.weighted_instance_fpr.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = batch.cosines.row(i);
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    std::size_t count = 0;
    double weighted = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == y) continue;
      if (row[j] > threshold.t_u) {
        state.mask[i * c + j] = 1;
        ++count;
        weighted += fp_weight(row[j], p, signed_form);
      }
    }
    state.instance_fpr[i] = static_cast<double>(count) / static_cast<double>(c - 1);
    state.weighted_instance_fpr[i] = weighted / static_cast<double>(c - 1);
  }
  return state;
}

namespace {

// Row logits in exponent scale: slot y holds s*G(cos), slot j holds H_j.
void row_logits(const LogitsBatch& batch, const LossConfig& cfg, const PenaltyState* state,
                std::size_t i, std::vector<double>& out) {
  const std::size_t c = batch.class_count();
  const auto row = batch.cosines.row(i);
  const auto y = static_cast<std::size_t>(batch.labels[i]);
  const double add =
      state ? cfg.alpha * state->weighted_instance_fpr[i] / cfg.gamma_u : 0.0;
  out.resize(c);
  for (std::size_t j = 0; j < c; ++j) {
    if (j == y) {
      double g = row[j];
      if (cfg.kind == LossKind::CosFace || cfg.kind == LossKind::FprPenaltyCosFace)
        g = row[j] - cfg.m;
      else if (is_arcface_kind(cfg.kind))
        g = arcface_target(row[j], cfg.m);
      out[j] = cfg.s * g;
    } else {
      out[j] = cfg.s * (row[j] + add);
    }
  }
}

LossOutput forward_impl(const LogitsBatch& batch, const LossConfig& cfg,
                        std::optional<PenaltyState> state) {
  validate(cfg);
  validate(batch);
  const std::size_t n = batch.batch_size();
  const std::size_t c = batch.class_count();
  if (n == 0 || c < 2) throw std::invalid_argument("loss_forward: need n >= 1 and c >= 2");

  LossOutput out;
  out.per_sample.resize(n);
  std::vector<double> logits;
  for (std::size_t i = 0; i < n; ++i) {
    row_logits(batch, cfg, state ? &*state : nullptr, i, logits);
    const double hi = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double l : logits) sum += std::exp(l - hi);
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    const double li = -(logits[y] - hi) + std::log(sum);
    if (!std::isfinite(li)) throw std::runtime_error("loss_forward: non-finite per-sample loss");
    out.per_sample[i] = li;
    out.loss += li;
  }
  out.loss /= static_cast<double>(n);
  out.penalty = std::move(state);
  return out;
}

}  // namespace

LossOutput loss_forward(const LogitsBatch& batch, const LossConfig& cfg,
                        const std::optional<ThresholdEstimate>& threshold) {
  if (is_penalty_kind(cfg.kind)) {
    if (!threshold.has_value())
      throw std::invalid_argument("loss_forward: penalty kind requires a threshold estimate");
    return forward_impl(batch, cfg, instance_fpr(batch, *threshold, cfg.p));
  }
  if (threshold.has_value())
    throw std::invalid_argument("loss_forward: threshold given for a non-penalty kind");
  return forward_impl(batch, cfg, std::nullopt);
}

LossOutput loss_forward_with_state(const LogitsBatch& batch, const LossConfig& cfg,
                                   PenaltyState state) {
  if (!is_penalty_kind(cfg.kind))
    throw std::invalid_argument("loss_forward_with_state: kind has no penalty state");
  return forward_impl(batch, cfg, std::move(state));
}

Matrix loss_backward(const LogitsBatch& batch, const LossConfig& cfg, const LossOutput& out) {
  validate(cfg);
  validate(batch);
  const std::size_t n = batch.batch_size();
  const std::size_t c = batch.class_count();
  if (is_penalty_kind(cfg.kind) && !out.penalty.has_value())
    throw std::invalid_argument("loss_backward: output lacks the penalty state");
  if (out.per_sample.size() != n)
    throw std::invalid_argument("loss_backward: output batch size mismatch");

  const PenaltyState* state = out.penalty ? &*out.penalty : nullptr;
  const bool signed_form = state ? !(state->threshold.t_u > 0.0) : false;
  const double inv_n = 1.0 / static_cast<double>(n);

  Matrix grad(n, c);
  std::vector<double> logits;
  for (std::size_t i = 0; i < n; ++i) {
    row_logits(batch, cfg, state, i, logits);
    const double hi = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - hi);
    const auto y = static_cast<std::size_t>(batch.labels[i]);
    const auto row = batch.cosines.row(i);
    const double p_y = std::exp(logits[y] - hi) / z;

    double dG = 1.0;
    if (is_arcface_kind(cfg.kind)) dG = arcface_target_derivative(row[y], cfg.m);
    grad(i, y) = (p_y - 1.0) * cfg.s * dG * inv_n;

    // The weighted FPR feeds every non-target exponent of the row, so a
    // masked cosine j receives sum_k(dL/dH_k) = (1 - P_y) through it.
    const double coupling_scale =
        state ? (1.0 - p_y) * cfg.s * (cfg.alpha / cfg.gamma_u) / static_cast<double>(c - 1) : 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (j == y) continue;
      const double p_j = std::exp(logits[j] - hi) / z;
      double g = cfg.s * p_j;
      if (state && state->mask[i * c + j])
        g += coupling_scale * fp_weight_derivative(row[j], cfg.p, signed_form);
      grad(i, j) = g * inv_n;
    }
  }
  require_finite(grad, "loss_backward");
  return grad;
}

std::pair<Matrix, Matrix> classifier_grads(const Matrix& embeddings, const Matrix& raw_weights,
                                           const Matrix& grad_cosines) {
  const std::size_t n = embeddings.rows();
  const std::size_t d = embeddings.cols();
  const std::size_t c = raw_weights.cols();
  if (raw_weights.rows() != d || grad_cosines.rows() != n || grad_cosines.cols() != c)
    throw std::invalid_argument("classifier_grads: shape mismatch");

  // Column norms and unit columns of the stored weights.
  std::vector<double> norms(c);
  Matrix unit(d, c);
  for (std::size_t j = 0; j < c; ++j) {
    double sq = 0.0;
    for (std::size_t r = 0; r < d; ++r) sq += raw_weights(r, j) * raw_weights(r, j);
    const double nm = std::sqrt(sq);
    if (nm == 0.0)
      throw std::runtime_error("classifier_grads: zero-norm weight column " + std::to_string(j));
    norms[j] = nm;
    for (std::size_t r = 0; r < d; ++r) unit(r, j) = raw_weights(r, j) / nm;
  }

  Matrix grad_embeddings = matmul(grad_cosines, transpose(unit));

  // grad_w_j = sum_i g_ij (x_i - cos_ij w_hat_j) / ||w_j||
  Matrix accum = matmul(transpose(embeddings), grad_cosines);  // d x c, column j = sum_i g_ij x_i
  Matrix grad_weights(d, c);
  for (std::size_t j = 0; j < c; ++j) {
    double along = 0.0;  // sum_i g_ij cos_ij with pre-clamp cosines
    for (std::size_t i = 0; i < n; ++i) {
      double cos_ij = 0.0;
      for (std::size_t r = 0; r < d; ++r) cos_ij += embeddings(i, r) * unit(r, j);
      along += grad_cosines(i, j) * cos_ij;
    }
    for (std::size_t r = 0; r < d; ++r)
      grad_weights(r, j) = (accum(r, j) - along * unit(r, j)) / norms[j];
  }
  require_finite(grad_weights, "classifier_grads weights");
  return {std::move(grad_weights), std::move(grad_embeddings)};
}

}  // namespace fairfpr
