#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

#include "hyperattn/matrix.hpp"

namespace hyperattn {

struct NormEstimate {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct PowerIterationOptions {
  double rel_tol = 1e-6;
  std::size_t max_iter = 10'000;
  std::uint64_t seed = 0;
};

/// Largest singular value by power iteration on M^T M from a seeded random
/// unit start.
///
/// Stops once successive estimates agree to a tenth of rel_tol, which keeps
/// the final error within rel_tol when the squared singular-value ratio
/// sigma_2^2 / sigma_1^2 is at most 0.9. On hitting max_iter the last
/// iterate is returned with converged = false.
NormEstimate operator_norm(const Matrix& m, const PowerIterationOptions& options = {});

/// Matrix-free variant: apply(x, y) writes M x into y (length rows),
/// apply_transpose(y, x) writes M^T y into x (length cols).
NormEstimate operator_norm(
    std::size_t rows, std::size_t cols,
    const std::function<void(std::span<const double>, std::span<double>)>& apply,
    const std::function<void(std::span<const double>, std::span<double>)>& apply_transpose,
    const PowerIterationOptions& options = {});

/// Exact largest singular value from the eigen-decomposition of the Gram
/// matrix of the smaller side. Meant for tall-thin matrices (n x d outputs,
/// V) whose leading singular values are too close for power iteration.
double gram_operator_norm(const Matrix& m);

/// Matrix-free power iteration on diag(row_scale) * m.
NormEstimate scaled_operator_norm(const Matrix& m, std::span<const double> row_scale,
                                  const PowerIterationOptions& options = {});

struct StableRank {
  double value = 0.0;
  bool converged = false;
};

/// ||M||_F^2 / ||M||_op^2. Throws InvalidArgument for the zero matrix.
StableRank stable_rank(const Matrix& m, const PowerIterationOptions& options = {});

}  // namespace hyperattn
