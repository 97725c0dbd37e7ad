#include "fairfpr/logits_batch.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace fairfpr {

LogitsBatch cosine_logits(const Matrix& embeddings, const Matrix& class_weights,
                          const std::vector<int>& labels) {
  if (embeddings.cols() != class_weights.rows())
    throw std::invalid_argument("cosine_logits: embedding dim " +
                                std::to_string(embeddings.cols()) + " vs weight dim " +
                                std::to_string(class_weights.rows()));
  if (labels.size() != embeddings.rows())
    throw std::invalid_argument("cosine_logits: labels size mismatch");

  LogitsBatch batch;
  batch.cosines = matmul(embeddings, class_weights);
  for (double& x : batch.cosines.data()) x = std::clamp(x, -1.0, 1.0);
  batch.labels = labels;
  validate(batch);
  return batch;
}

void validate(const LogitsBatch& batch) {
  const auto c = static_cast<int>(batch.class_count());
  if (batch.labels.size() != batch.batch_size())
    throw std::invalid_argument("LogitsBatch: one label per row required");
  for (int l : batch.labels)
    if (l < 0 || l >= c) throw std::invalid_argument("LogitsBatch: label out of range");
  for (double x : batch.cosines.data())
    if (!(x >= -1.0 - 1e-9 && x <= 1.0 + 1e-9))
      throw std::invalid_argument("LogitsBatch: cosine outside [-1, 1]");
}

}  // namespace fairfpr
