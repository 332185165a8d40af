#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>

#include "hyperattn/approx_d.hpp"
#include "hyperattn/lsh.hpp"
#include "hyperattn/mask.hpp"
#include "hyperattn/matrix.hpp"
#include "hyperattn/sampler.hpp"

namespace hyperattn {

struct HyperParams {
  std::size_t block_size = 256;
  std::size_t sample_count = 256;
  /// bits == 0 selects ceil(log2 n) for the block being hashed. The seed is
  /// ignored; hyperplanes derive from `seed`.
  LshParams lsh{0, 0};
  /// Estimator settings. m, shift and seed are overwritten from the fields
  /// below; mode selects theoretical vs practical for the whole pipeline.
  ApproxDParams approx_d;
  double epsilon = 0.5;
  std::size_t causal_base_threshold = 4096;
  /// Global exponent shift; nullopt picks auto_shift(Q, K).
  std::optional<double> shift;
  /// Use every column exactly once (m = n, uniform weights, no caps). Turns
  /// both stages into exact computations; meant for verification.
  bool complete_cover = false;
  /// Build a sortLSH mask inside each causal off-diagonal block.
  bool offdiag_lsh_mask = true;
  std::uint64_t seed = 0;

  ApproxDMode mode() const noexcept { return approx_d.mode; }
  void validate() const;
};

struct HyperOutput {
  DiagonalEstimate d_tilde;
  /// The sampler of the non-causal path. Empty for causal output, which
  /// uses one sampler per off-diagonal block.
  RowNormSampler sampler;
  Matrix attention;
  MaskSpec mask_used;
  double shift = 0.0;
  std::size_t offdiag_calls = 0;  // causal only
};

double resolve_shift(const HyperParams& params, const Matrix& q, const Matrix& k);

/// Approximate attention D~^-1 A S^T S V given a heavy-entry mask.
///
/// Practical mode shares one uniform column sample between the row-sum
/// estimator and the product, and evaluates the masked entries exactly:
///   out_i = (<M_i . A_i, V> + (n/m) sum_r [l_r not in M_i] A_{i,l_r} V_{l_r}) / d~_i.
/// Theoretical mode uses the capped estimator and an independent
/// squared-row-norm sampler over all columns.
HyperOutput hyper_attention(const AttentionInputs& inputs, const MaskSpec& mask,
                            const HyperParams& params);

/// hyper_attention with a sortLSH mask built from Q and K.
HyperOutput hyper_attention_lsh(const AttentionInputs& inputs, const HyperParams& params);

struct CausalDiagonal {
  DiagonalEstimate d_tilde;
  std::size_t offdiag_calls = 0;
};

/// Recursive causal row-sum estimate: exact below causal_base_threshold,
/// otherwise [D11 ; D21 + D22] with D21 from the unmasked estimator on
/// (Q2, K1). Odd lengths give the top half ceil(n/2) rows.
CausalDiagonal causal_approx_d(const Matrix& q, const Matrix& k, const HyperParams& params);

/// Causal attention built on the same recursion. Row sums and products of
/// each node share their random draws, so output.d_tilde equals
/// causal_approx_d(...) for the same params.
HyperOutput causal_hyper_attention(const AttentionInputs& inputs, const HyperParams& params);

}  // namespace hyperattn
