#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fairfpr/logits_batch.hpp"
#include "fairfpr/thresholding.hpp"

namespace fairfpr {

enum class LossKind {
  PlainSoftmax,
  CosFace,
  ArcFace,
  FprPenaltyCosFace,
  FprPenaltyArcFace,
};

bool is_penalty_kind(LossKind kind);
bool is_arcface_kind(LossKind kind);
LossKind loss_kind_from_string(const std::string& name);
std::string to_string(LossKind kind);

struct LossConfig {
  LossKind kind = LossKind::CosFace;
  double s = 64.0;       // logit scale
  double m = 0.35;       // margin (cosine margin for cosface, angular for arcface)
  double alpha = 0.75;   // penalty factor, calibrated on the desk benchmark
  double p = 2.0;        // exponent of the false-positive weight F(z) = z^p
  double gamma_u = 1e-4; // target overall FPR
};

void validate(const LossConfig& cfg);

/// Per-sample false-positive bookkeeping against a unified threshold.
/// mask[i*c + j] is true iff cos(theta_j) > t_u and j != y_i; the target
/// column never counts. instance_fpr[i] = (#masked in row i) / (c-1);
/// weighted_instance_fpr[i] sums F(cos) over masked entries instead of 1.
/// F(z) = z^p while t_u > 0; with a non-positive threshold the signed form
/// sgn(z)|z|^p is used so negative cosines keep their sign.
struct PenaltyState {
  ThresholdEstimate threshold;
  std::vector<std::uint8_t> mask;
  std::vector<double> instance_fpr;
  std::vector<double> weighted_instance_fpr;
};

PenaltyState instance_fpr(const LogitsBatch& batch, const ThresholdEstimate& threshold, double p);

struct LossOutput {
  double loss = 0.0;                    // mean over the batch
  std::vector<double> per_sample;
  std::optional<PenaltyState> penalty;  // present for penalty kinds
};

/// Mean of -log( e^{s G(cos th_y)} / (e^{s G(cos th_y)} + sum_j e^{H_j}) )
/// with H_j = s cos(theta_j) for the baseline kinds and
/// H_j = s (cos(theta_j) + alpha * weighted_instance_fpr / gamma_u) for the
/// penalty kinds. Evaluated in log-sum-exp form with max subtraction.
/// `threshold` must be present exactly when `cfg.kind` is a penalty kind.
LossOutput loss_forward(const LogitsBatch& batch, const LossConfig& cfg,
                        const std::optional<ThresholdEstimate>& threshold);

/// Same computation with a caller-supplied penalty state (penalty kinds only).
LossOutput loss_forward_with_state(const LogitsBatch& batch, const LossConfig& cfg,
                                   PenaltyState state);

/// Gradient of the mean loss w.r.t. the cosines. The mask and threshold of
/// `out` are treated as constants of the iteration; the cosines inside the
/// weighted instance FPR are not, which adds the mask-gated coupling term
/// (1 - P_y) * s * (alpha/gamma_u) * F'(cos) / (c-1) to every masked column.
Matrix loss_backward(const LogitsBatch& batch, const LossConfig& cfg, const LossOutput& out);

/// Chains a cosine gradient onto the raw (unnormalized) class weights and the
/// normalized embeddings. Weight columns are normalized in the forward pass,
/// so their gradient carries the Jacobian (I - w_hat w_hat^T)/||w||.
/// Returns (grad_weights d x c, grad_embeddings n x d).
std::pair<Matrix, Matrix> classifier_grads(const Matrix& embeddings, const Matrix& raw_weights,
                                           const Matrix& grad_cosines);

}  // namespace fairfpr
