#include "hyperattn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"

namespace hyperattn {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw InvalidArgument("matrix data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(rows_) + "x" +
                          std::to_string(cols_));
  }
  if (!all_finite()) throw InvalidArgument("matrix contains non-finite entries");
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::filled(std::size_t rows, std::size_t cols, double value) {
  return Matrix(rows, cols, std::vector<double>(rows * cols, value));
}

Matrix Matrix::row_slice(std::size_t begin, std::size_t end) const {
  if (begin > end || end > rows_) throw InvalidArgument("row_slice out of range");
  Matrix out(end - begin, cols_);
  std::copy(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
            data_.begin() + static_cast<std::ptrdiff_t>(end * cols_), out.data_.begin());
  return out;
}

Matrix Matrix::gather_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] >= rows_) throw InvalidArgument("gather_rows index out of range");
    auto src = row(indices[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

Matrix Matrix::transposed() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

AttentionInputs::AttentionInputs(Matrix q_in, Matrix k_in, Matrix v_in)
    : q(std::move(q_in)), k(std::move(k_in)), v(std::move(v_in)) {
  if (q.rows() != k.rows() || q.rows() != v.rows() || q.cols() != k.cols() ||
      q.cols() != v.cols()) {
    throw InvalidArgument("Q, K and V must all be n x d");
  }
}

DiagonalEstimate::DiagonalEstimate(std::vector<double> v) : values(std::move(v)) {
  for (double x : values) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw InvalidArgument("diagonal estimate entries must be positive and finite");
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t) s += a[t] * b[t];
  return s;
}

double norm2(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

double frobenius_norm(const Matrix& m) noexcept { return norm2(m.data()); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw InvalidArgument("matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto dst = out.row(i);
      for (std::size_t t = 0; t < a.cols(); ++t) {
        const double s = a(i, t);
        if (s == 0.0) continue;
        auto src = b.row(t);
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += s * src[j];
      }
    }
  });
  return out;
}

Matrix matmul_transposed(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw InvalidArgument("matmul_transposed: column counts differ");
  Matrix out(a.rows(), b.rows());
  parallel_for(a.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto ai = a.row(i);
      for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(ai, b.row(j));
    }
  });
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidArgument("subtract: shapes differ");
  Matrix out(a.rows(), a.cols());
  auto o = out.data();
  auto x = a.data();
  auto y = b.data();
  for (std::size_t t = 0; t < o.size(); ++t) o[t] = x[t] - y[t];
  return out;
}

Matrix scale_rows(const Matrix& m, std::span<const double> scale) {
  if (scale.size() != m.rows()) throw InvalidArgument("scale_rows: length mismatch");
  Matrix out = m;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double& x : out.row(i)) x *= scale[i];
  return out;
}

}  // namespace hyperattn
