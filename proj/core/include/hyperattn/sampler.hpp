#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "hyperattn/mask.hpp"
#include "hyperattn/matrix.hpp"

namespace hyperattn {

/// Row-sampling matrix S (m x n): row r of S is weights[r] * e_{indices[r]}.
struct RowNormSampler {
  std::vector<std::size_t> indices;
  std::vector<double> weights;

  std::size_t m() const noexcept { return indices.size(); }
};

/// Draws m i.i.d. rows of V with probability ||V_i||^2 / ||V||_F^2 and
/// weight ||V||_F / (sqrt(m) ||V_i||). Rows of zero norm are never drawn.
///
/// With injected indices (column samples shared from the row-sum estimator)
/// the indices are used as-is with the uniform-sampling weight sqrt(n / m).
/// Throws InvalidArgument when V is all zeros or m is 0.
RowNormSampler build_sampler(const Matrix& v, std::size_t m, std::uint64_t seed,
                             const std::optional<std::vector<std::size_t>>& injected = {});

/// S V (m x d).
Matrix sampled_rows(const Matrix& v, const RowNormSampler& s);

/// D~^-1 A S^T S V without forming A: O(n m d).
///
/// When `exclude` is given, sampled terms whose (row, index) pair lies in the
/// mask are dropped, so the result estimates D~^-1 ((1 - M) . A) V only.
Matrix apply_sampled_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                               const DiagonalEstimate& d_tilde, const RowNormSampler& s,
                               double shift, const MaskSpec* exclude = nullptr);

/// Unnormalized sampled product ((1 - M) . A) S^T S V, or A S^T S V without
/// a mask.
Matrix sampled_attention_product(const Matrix& q, const Matrix& k, const Matrix& v,
                                 const RowNormSampler& s, double shift,
                                 const MaskSpec* exclude = nullptr);

/// Exact (M . A) V restricted to the masked entries, O(d nnz(M)).
Matrix masked_attention_product(const Matrix& q, const Matrix& k, const Matrix& v,
                                const MaskSpec& mask, double shift);

}  // namespace hyperattn
