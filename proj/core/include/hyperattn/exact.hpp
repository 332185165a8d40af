#pragma once

#include <cstddef>
#include <vector>

#include "hyperattn/matrix.hpp"

namespace hyperattn {

/// Dense A' with A'(i,j) = exp(<q_i, k_j> - shift).
///
/// Quadratic in n; used as the reference oracle. Throws ExpOverflow naming
/// the first offending entry when an exponent exceeds kMaxExponent.
Matrix exact_attention_matrix(const Matrix& q, const Matrix& k, double shift);
Matrix exact_attention_matrix(const AttentionInputs& inputs, double shift);

/// Row sums of a nonnegative matrix.
DiagonalEstimate exact_row_sums(const Matrix& a);

/// Softmax attention D^-1 A V, optionally under the lower-triangular causal
/// mask. Streams one row at a time with per-row max subtraction, so no n x n
/// buffer is allocated.
Matrix exact_attention(const AttentionInputs& inputs, bool causal);

/// Dense softmax matrix D^-1 A (or D_C^-1 (M_C . A) when causal).
Matrix softmax_matrix(const Matrix& q, const Matrix& k, bool causal);

/// Exact causal row sums <M_C[i,:], exp(q_i K^T - shift)>.
std::vector<double> exact_causal_row_sums(const Matrix& q, const Matrix& k, double shift);

/// Smallest shift that keeps every exponent at or below the safe limit with
/// room for summing n terms, using the Cauchy-Schwarz bound on <q_i, k_j>.
/// Zero for ordinary inputs.
double auto_shift(const Matrix& q, const Matrix& k) noexcept;

}  // namespace hyperattn
