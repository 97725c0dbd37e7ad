#pragma once

#include <vector>

#include "fairfpr/matrix.hpp"

namespace fairfpr {

/// Cosine similarities between a batch of embeddings and the class weight
/// columns, with the ground-truth class index per row.
struct LogitsBatch {
  Matrix cosines;            // n_b x c, each entry in [-1, 1]
  std::vector<int> labels;   // per row, in [0, c)

  std::size_t batch_size() const { return cosines.rows(); }
  std::size_t class_count() const { return cosines.cols(); }
};

/// cosines[i][j] = embeddings.row(i) . class_weights.col(j), clamped to
/// [-1, 1]. Both inputs are expected normalized (unit rows / unit columns).
LogitsBatch cosine_logits(const Matrix& embeddings, const Matrix& class_weights,
                          const std::vector<int>& labels);

/// Throws on shape/label/range violations.
void validate(const LogitsBatch& batch);

}  // namespace fairfpr
