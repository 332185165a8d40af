#include "hyperattn/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Eigenvalues>

#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"
#include "hyperattn/random.hpp"

namespace hyperattn {

NormEstimate operator_norm(
    std::size_t rows, std::size_t cols,
    const std::function<void(std::span<const double>, std::span<double>)>& apply,
    const std::function<void(std::span<const double>, std::span<double>)>& apply_transpose,
    const PowerIterationOptions& options) {
  if (!(options.rel_tol > 0.0)) throw InvalidArgument("operator_norm: rel_tol must be positive");
  NormEstimate result;
  if (rows == 0 || cols == 0) {
    result.converged = true;
    return result;
  }

  Engine rng(derive_seed(options.seed, {stream::kPowerIteration}));
  std::normal_distribution<double> normal;
  std::vector<double> x(cols);
  std::vector<double> y(rows);
  for (double& v : x) v = normal(rng);
  const double start_norm = norm2(x);
  for (double& v : x) v /= start_norm;

  double previous = 0.0;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    apply(x, y);
    const double sigma = norm2(y);
    result.value = sigma;
    result.iterations = it;
    if (sigma == 0.0) {
      // x landed in the null space; for a random start this means M = 0.
      result.converged = true;
      return result;
    }
    if (it > 1 && std::abs(sigma - previous) <= 0.1 * options.rel_tol * sigma) {
      result.converged = true;
      return result;
    }
    previous = sigma;
    apply_transpose(y, x);
    const double xn = norm2(x);
    if (xn == 0.0) {
      result.converged = true;
      return result;
    }
    for (double& v : x) v /= xn;
  }
  return result;
}

NormEstimate operator_norm(const Matrix& m, const PowerIterationOptions& options) {
  auto apply = [&](std::span<const double> x, std::span<double> y) {
    parallel_for(m.rows(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) y[i] = dot(m.row(i), x);
    });
  };
  auto apply_transpose = [&](std::span<const double> y, std::span<double> x) {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double s = y[i];
      auto mi = m.row(i);
      for (std::size_t j = 0; j < x.size(); ++j) x[j] += s * mi[j];
    }
  };
  return operator_norm(m.rows(), m.cols(), apply, apply_transpose, options);
}

double gram_operator_norm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  const bool by_cols = m.cols() <= m.rows();
  const std::size_t k = by_cols ? m.cols() : m.rows();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k),
                                               static_cast<Eigen::Index>(k));
  if (by_cols) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      auto r = m.row(i);
      for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b <= a; ++b) gram(a, b) += r[a] * r[b];
    }
  } else {
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b <= a; ++b) gram(a, b) = dot(m.row(a), m.row(b));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw Error("Gram eigen-decomposition failed");
  return std::sqrt(std::max(0.0, solver.eigenvalues().maxCoeff()));
}

NormEstimate scaled_operator_norm(const Matrix& m, std::span<const double> row_scale,
                                  const PowerIterationOptions& options) {
  if (row_scale.size() != m.rows()) throw InvalidArgument("row scale has the wrong length");
  auto apply = [&](std::span<const double> x, std::span<double> y) {
    parallel_for(m.rows(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) y[i] = row_scale[i] * dot(m.row(i), x);
    });
  };
  auto apply_transpose = [&](std::span<const double> y, std::span<double> x) {
    std::fill(x.begin(), x.end(), 0.0);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      const double s = row_scale[i] * y[i];
      auto mi = m.row(i);
      for (std::size_t j = 0; j < x.size(); ++j) x[j] += s * mi[j];
    }
  };
  return operator_norm(m.rows(), m.cols(), apply, apply_transpose, options);
}

StableRank stable_rank(const Matrix& m, const PowerIterationOptions& options) {
  const double fro = frobenius_norm(m);
  if (fro == 0.0) throw InvalidArgument("stable_rank of the zero matrix is undefined");
  const NormEstimate op = operator_norm(m, options);
  return {fro * fro / (op.value * op.value), op.converged};
}

}  // namespace hyperattn
