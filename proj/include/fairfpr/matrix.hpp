#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace fairfpr {

/// Dense row-major matrix of doubles. All public operations keep entries
/// finite; producing a NaN/Inf is reported as an error instead of propagated.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> v);

/// Standard product; throws on inner-dimension mismatch or non-finite result.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

/// Scales every row to unit Euclidean norm. A zero row is an error.
Matrix l2_normalize_rows(const Matrix& m);

/// Column counterpart, used for classifier weights stored unnormalized.
Matrix l2_normalize_columns(const Matrix& m);

/// Throws std::runtime_error naming `what` if any entry is NaN/Inf.
void require_finite(const Matrix& m, const char* what);

}  // namespace fairfpr
