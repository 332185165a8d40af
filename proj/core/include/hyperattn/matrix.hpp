#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hyperattn {

/// Dense row-major matrix of doubles.
///
/// Entries are finite: the data-taking constructor rejects NaN/Inf. Mutable
/// element access exists for builders; the library never mutates a matrix it
/// received as input.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix filled(std::size_t rows, std::size_t cols, double value);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const noexcept {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) noexcept { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> data() const noexcept { return data_; }
  std::span<double> data() noexcept { return data_; }

  /// Rows [begin, end) as a new matrix.
  Matrix row_slice(std::size_t begin, std::size_t end) const;
  /// Rows picked by index, in the given order.
  Matrix gather_rows(std::span<const std::size_t> indices) const;
  Matrix transposed() const;

  /// True when every entry is finite.
  bool all_finite() const noexcept;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// The (Q, K, V) triple. All three are n x d.
struct AttentionInputs {
  Matrix q;
  Matrix k;
  Matrix v;

  AttentionInputs() = default;
  AttentionInputs(Matrix q_in, Matrix k_in, Matrix v_in);

  std::size_t n() const noexcept { return q.rows(); }
  std::size_t d() const noexcept { return q.cols(); }
};

/// Diagonal of D (exact row sums) or of its estimate. Entries are positive.
struct DiagonalEstimate {
  std::vector<double> values;

  DiagonalEstimate() = default;
  explicit DiagonalEstimate(std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  double operator[](std::size_t i) const noexcept { return values[i]; }
};

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm2(std::span<const double> a) noexcept;
double frobenius_norm(const Matrix& m) noexcept;

/// a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
/// a * b^T, the shape used for Q K^T.
Matrix matmul_transposed(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
/// diag(scale) * m.
Matrix scale_rows(const Matrix& m, std::span<const double> scale);

}  // namespace hyperattn
