#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fairfpr/matrix.hpp"

namespace fairfpr {

/// Feed-forward embedding net: linear layers with rectified-linear hidden
/// activations, final output L2-normalized per row.
struct EncoderParams {
  std::vector<Matrix> weights;               // layer l: in_dim x out_dim
  std::vector<std::vector<double>> biases;   // layer l: out_dim
  std::size_t raw_dim = 0;
  std::size_t embed_dim = 0;

  bool operator==(const EncoderParams&) const = default;
};

/// He-scaled Gaussian init: std = sqrt(2 / fan_in), biases zero.
EncoderParams encoder_init(std::size_t raw_dim, const std::vector<std::size_t>& hidden_dims,
                           std::size_t embed_dim, std::uint64_t seed);

struct ForwardTrace {
  std::vector<Matrix> inputs;     // inputs[l] feeds layer l; inputs[0] is the batch
  std::vector<Matrix> pre_acts;   // z_l = inputs[l] W_l + b_l
  Matrix pre_norm;                // final layer output v
  std::vector<double> norms;      // ||v_i|| per row
  Matrix embeddings;              // v_i / ||v_i||
};

/// Errors if a row of the final layer output has exactly zero norm (that
/// signals a broken init or learning rate, not a case to paper over).
ForwardTrace encoder_forward(const EncoderParams& p, const Matrix& batch);

struct EncoderGrads {
  std::vector<Matrix> weights;
  std::vector<std::vector<double>> biases;
};

/// Exact gradients through the row normalization (I - uu^T)/||v||, the
/// rectified-linear mask (subgradient 0 at 0), and the linear layers.
/// Returns (parameter grads, grad w.r.t. the input batch).
std::pair<EncoderGrads, Matrix> encoder_backward(const EncoderParams& p, const ForwardTrace& t,
                                                 const Matrix& grad_embeddings);

EncoderGrads zero_grads_like(const EncoderParams& p);

}  // namespace fairfpr
