#include "fairfpr/encoder.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "fairfpr/rng.hpp"

namespace fairfpr {

EncoderParams encoder_init(std::size_t raw_dim, const std::vector<std::size_t>& hidden_dims,
                           std::size_t embed_dim, std::uint64_t seed) {
  if (raw_dim < 1 || embed_dim < 1) throw std::invalid_argument("encoder_init: dims must be >= 1");
  for (std::size_t h : hidden_dims)
    if (h < 1) throw std::invalid_argument("encoder_init: hidden dim must be >= 1");

  std::vector<std::size_t> dims;
  dims.push_back(raw_dim);
  dims.insert(dims.end(), hidden_dims.begin(), hidden_dims.end());
  dims.push_back(embed_dim);

  EncoderParams p;
  p.raw_dim = raw_dim;
  p.embed_dim = embed_dim;
  const Rng root = Rng(seed).split("encoder-init");
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Rng lrng = root.split("layer/" + std::to_string(l));
    const double std_dev = std::sqrt(2.0 / static_cast<double>(dims[l]));
    Matrix w(dims[l], dims[l + 1]);
    for (double& x : w.data()) x = std_dev * lrng.next_normal();
    p.weights.push_back(std::move(w));
    p.biases.emplace_back(dims[l + 1], 0.0);
  }
  return p;
}

ForwardTrace encoder_forward(const EncoderParams& p, const Matrix& batch) {
  if (batch.cols() != p.raw_dim)
    throw std::invalid_argument("encoder_forward: batch has " + std::to_string(batch.cols()) +
                                " columns, encoder expects " + std::to_string(p.raw_dim));
  const std::size_t layers = p.weights.size();
  ForwardTrace t;
  t.inputs.reserve(layers);
  t.pre_acts.reserve(layers);

  Matrix a = batch;
  for (std::size_t l = 0; l < layers; ++l) {
    t.inputs.push_back(a);
    Matrix z = matmul(a, p.weights[l]);
    for (std::size_t i = 0; i < z.rows(); ++i)
      for (std::size_t j = 0; j < z.cols(); ++j) z(i, j) += p.biases[l][j];
    t.pre_acts.push_back(z);
    if (l + 1 < layers) {
      for (double& x : z.data()) x = x > 0.0 ? x : 0.0;
      a = std::move(z);
    } else {
      t.pre_norm = std::move(z);
    }
  }

  t.norms.resize(t.pre_norm.rows());
  t.embeddings = Matrix(t.pre_norm.rows(), t.pre_norm.cols());
  for (std::size_t i = 0; i < t.pre_norm.rows(); ++i) {
    const double n = l2_norm(t.pre_norm.row(i));
    if (n == 0.0)
      throw std::runtime_error("encoder_forward: zero-norm embedding at row " + std::to_string(i));
    t.norms[i] = n;
    for (std::size_t j = 0; j < t.pre_norm.cols(); ++j) t.embeddings(i, j) = t.pre_norm(i, j) / n;
  }
  require_finite(t.embeddings, "encoder_forward embeddings");
  return t;
}

EncoderGrads zero_grads_like(const EncoderParams& p) {
  EncoderGrads g;
  for (const auto& w : p.weights) g.weights.emplace_back(w.rows(), w.cols());
  for (const auto& b : p.biases) g.biases.emplace_back(b.size(), 0.0);
  return g;
}

std::pair<EncoderGrads, Matrix> encoder_backward(const EncoderParams& p, const ForwardTrace& t,
                                                 const Matrix& grad_embeddings) {
  const std::size_t layers = p.weights.size();
  if (grad_embeddings.rows() != t.embeddings.rows() ||
      grad_embeddings.cols() != t.embeddings.cols())
    throw std::invalid_argument("encoder_backward: upstream gradient shape mismatch");

  // Through v -> v/||v||: g_v = (g - (g.u) u) / ||v||, u = v/||v||.
  Matrix g(grad_embeddings.rows(), grad_embeddings.cols());
  for (std::size_t i = 0; i < g.rows(); ++i) {
    const auto u = t.embeddings.row(i);
    const double along = dot(grad_embeddings.row(i), u);
    for (std::size_t j = 0; j < g.cols(); ++j)
      g(i, j) = (grad_embeddings(i, j) - along * u[j]) / t.norms[i];
  }

  EncoderGrads grads = zero_grads_like(p);
  for (std::size_t li = layers; li-- > 0;) {
    if (li + 1 < layers) {
      // Rectified-linear mask; subgradient at 0 is 0.
      const Matrix& z = t.pre_acts[li];
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
          if (!(z(i, j) > 0.0)) g(i, j) = 0.0;
    }
    grads.weights[li] = matmul(transpose(t.inputs[li]), g);
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) grads.biases[li][j] += g(i, j);
    g = matmul(g, transpose(p.weights[li]));
  }
  return {std::move(grads), std::move(g)};
}

}  // namespace fairfpr
