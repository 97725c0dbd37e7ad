#include "fairfpr/matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace fairfpr {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m;
  m.rows_ = rows.size();
  m.cols_ = rows.size() ? rows.begin()->size() : 0;
  m.data_.reserve(m.rows_ * m.cols_);
  for (const auto& r : rows) {
    if (r.size() != m.cols_) throw std::invalid_argument("Matrix::from_rows: ragged rows");
    m.data_.insert(m.data_.end(), r.begin(), r.end());
  }
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void require_finite(const Matrix& m, const char* what) {
  for (double x : m.data()) {
    if (!std::isfinite(x)) throw std::runtime_error(std::string(what) + ": non-finite entry");
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions " + std::to_string(a.cols()) +
                                " and " + std::to_string(b.rows()) + " do not match");
  }
  Matrix out(a.rows(), b.cols(), 0.0);
  // i-k-j order keeps the inner loop contiguous over b and out.
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.data().data() + k * b.cols();
      double* orow = out.data().data() + i * out.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  require_finite(out, "matmul");
  return out;
}

Matrix transpose(const Matrix& m) {
  Matrix out(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out(j, i) = m(i, j);
  return out;
}

Matrix l2_normalize_rows(const Matrix& m) {
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i) {
    const double n = l2_norm(m.row(i));
    if (n == 0.0) throw std::runtime_error("l2_normalize_rows: zero row " + std::to_string(i));
    for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j) / n;
  }
  require_finite(out, "l2_normalize_rows");
  return out;
}

Matrix l2_normalize_columns(const Matrix& m) {
  Matrix out = m;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double sq = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) sq += m(i, j) * m(i, j);
    const double n = std::sqrt(sq);
    if (n == 0.0)
      throw std::runtime_error("l2_normalize_columns: zero column " + std::to_string(j));
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, j) = m(i, j) / n;
  }
  require_finite(out, "l2_normalize_columns");
  return out;
}

}  // namespace fairfpr
