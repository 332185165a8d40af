#include "hyperattn/exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "detail.hpp"
#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"

namespace hyperattn {

Matrix exact_attention_matrix(const Matrix& q, const Matrix& k, double shift) {
  if (q.cols() != k.cols()) throw InvalidArgument("Q and K must have equal column counts");
  Matrix a(q.rows(), k.rows());
  parallel_for(q.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto qi = q.row(i);
      for (std::size_t j = 0; j < k.rows(); ++j)
        a(i, j) = detail::checked_exp(dot(qi, k.row(j)), shift, i, j);
    }
  });
  return a;
}

Matrix exact_attention_matrix(const AttentionInputs& inputs, double shift) {
  return exact_attention_matrix(inputs.q, inputs.k, shift);
}

DiagonalEstimate exact_row_sums(const Matrix& a) {
  std::vector<double> sums(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double x : a.row(i)) s += x;
    sums[i] = s;
  }
  return DiagonalEstimate(std::move(sums));
}

Matrix exact_attention(const AttentionInputs& inputs, bool causal) {
  const std::size_t n = inputs.n();
  const std::size_t d = inputs.d();
  Matrix out(n, d);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> logits(n);
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t limit = causal ? i + 1 : n;
      auto qi = inputs.q.row(i);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        logits[j] = dot(qi, inputs.k.row(j));
        peak = std::max(peak, logits[j]);
      }
      double total = 0.0;
      auto dst = out.row(i);
      for (std::size_t j = 0; j < limit; ++j) {
        const double w = std::exp(logits[j] - peak);
        total += w;
        auto vj = inputs.v.row(j);
        for (std::size_t t = 0; t < d; ++t) dst[t] += w * vj[t];
      }
      for (double& x : dst) x /= total;
    }
  });
  return out;
}

Matrix softmax_matrix(const Matrix& q, const Matrix& k, bool causal) {
  if (q.cols() != k.cols()) throw InvalidArgument("Q and K must have equal column counts");
  if (causal && q.rows() != k.rows()) throw InvalidArgument("causal softmax needs square input");
  Matrix p(q.rows(), k.rows());
  parallel_for(q.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t limit = causal ? i + 1 : k.rows();
      auto qi = q.row(i);
      auto pi = p.row(i);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        pi[j] = dot(qi, k.row(j));
        peak = std::max(peak, pi[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < limit; ++j) {
        pi[j] = std::exp(pi[j] - peak);
        total += pi[j];
      }
      for (std::size_t j = 0; j < limit; ++j) pi[j] /= total;
    }
  });
  return p;
}

std::vector<double> exact_causal_row_sums(const Matrix& q, const Matrix& k, double shift) {
  if (q.rows() != k.rows() || q.cols() != k.cols())
    throw InvalidArgument("causal row sums need Q and K of equal shape");
  std::vector<double> sums(q.rows(), 0.0);
  parallel_for(q.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto qi = q.row(i);
      double s = 0.0;
      for (std::size_t j = 0; j <= i; ++j) s += detail::checked_exp(dot(qi, k.row(j)), shift, i, j);
      sums[i] = s;
    }
  });
  return sums;
}

double auto_shift(const Matrix& q, const Matrix& k) noexcept {
  double q_max = 0.0;
  double k_max = 0.0;
  for (std::size_t i = 0; i < q.rows(); ++i) q_max = std::max(q_max, norm2(q.row(i)));
  for (std::size_t j = 0; j < k.rows(); ++j) k_max = std::max(k_max, norm2(k.row(j)));
  // 600 leaves e^100 of headroom for row sums over n terms.
  return std::max(0.0, q_max * k_max - 600.0);
}

}  // namespace hyperattn
