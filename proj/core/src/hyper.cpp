#include "hyperattn/hyper.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "detail.hpp"
#include "hyperattn/errors.hpp"
#include "hyperattn/exact.hpp"
#include "hyperattn/parallel.hpp"
#include "hyperattn/random.hpp"

namespace hyperattn {

void HyperParams::validate() const {
  if (block_size == 0) throw InvalidArgument("block size must be at least 1");
  if (sample_count == 0) throw InvalidArgument("sample count must be at least 1");
  if (causal_base_threshold == 0) throw InvalidArgument("causal base threshold must be positive");
  if (lsh.bits != 0) lsh.validate();
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be non-negative");
}

double resolve_shift(const HyperParams& params, const Matrix& q, const Matrix& k) {
  return params.shift ? *params.shift : auto_shift(q, k);
}

namespace {

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return idx;
}

struct BlockEstimate {
  RowSumEstimate row_sums;
  RowNormSampler sampler;
  Matrix numerator;  // unnormalized product; empty when V is not given
};

// Row sums (and optionally the unnormalized product with V) of one
// rectangular attention block exp(Q K^T - shift) under a heavy-entry mask.
BlockEstimate estimate_block(const Matrix& q, const Matrix& k, const Matrix* v,
                             const MaskSpec& mask, const HyperParams& params, double shift,
                             std::uint64_t seed) {
  const std::size_t cols = k.rows();
  ApproxDParams adp = params.approx_d;
  adp.shift = shift;
  adp.seed = derive_seed(seed, {stream::kColumns});
  adp.m = std::min(params.sample_count, cols);
  adp.injected_indices.clear();
  if (params.complete_cover) {
    adp.mode = ApproxDMode::Practical;
    adp.injected_indices = iota_indices(cols);
  }
  const bool practical = adp.mode == ApproxDMode::Practical;
  if (practical) adp.fresh_indices_per_row = false;

  BlockEstimate out;
  out.row_sums = approx_d(q, k, mask, adp);
  if (!v) return out;

  if (practical) {
    // Masked entries exactly, the rest through the shared uniform sample.
    out.sampler = build_sampler(*v, out.row_sums.indices.size(), 0, out.row_sums.indices);
    out.numerator = masked_attention_product(q, k, *v, mask, shift);
    const Matrix rest = sampled_attention_product(q, k, *v, out.sampler, shift, &mask);
    auto dst = out.numerator.data();
    auto src = rest.data();
    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += src[t];
  } else {
    out.sampler = build_sampler(*v, adp.m, derive_seed(seed, {stream::kSampler}));
    out.numerator = sampled_attention_product(q, k, *v, out.sampler, shift);
  }
  return out;
}

LshParams lsh_for(const HyperParams& params, std::size_t n, std::uint64_t seed) {
  LshParams p = params.lsh;
  if (p.bits == 0) p.bits = default_hash_bits(n);
  p.seed = derive_seed(seed, {stream::kLsh});
  return p;
}

void normalize_rows(Matrix& m, std::span<const double> denominators) {
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (double& x : m.row(i)) x /= denominators[i];
}

}  // namespace

HyperOutput hyper_attention(const AttentionInputs& inputs, const MaskSpec& mask,
                            const HyperParams& params) {
  params.validate();
  const std::size_t n = inputs.n();
  if (mask.rows() != n || mask.cols() != n) throw InvalidArgument("mask must be n x n");

  HyperOutput out;
  out.shift = resolve_shift(params, inputs.q, inputs.k);
  BlockEstimate est =
      estimate_block(inputs.q, inputs.k, &inputs.v, mask, params, out.shift, params.seed);
  out.d_tilde = est.row_sums.diagonal();
  normalize_rows(est.numerator, out.d_tilde.values);
  out.attention = std::move(est.numerator);
  out.sampler = std::move(est.sampler);
  out.mask_used = mask;
  return out;
}

HyperOutput hyper_attention_lsh(const AttentionInputs& inputs, const HyperParams& params) {
  params.validate();
  const MaskSpec mask = sort_lsh_mask(inputs.q, inputs.k, params.block_size,
                                      lsh_for(params, inputs.n(), params.seed));
  return hyper_attention(inputs, mask, params);
}

namespace {

struct CausalNode {
  std::vector<double> row_sums;
  Matrix numerator;  // empty when V is not given
  std::size_t offdiag_calls = 0;
};

CausalNode causal_recurse(const Matrix& q, const Matrix& k, const Matrix* v,
                          const HyperParams& params, double shift, std::uint64_t node) {
  const std::size_t n = q.rows();
  CausalNode out;
  if (n <= params.causal_base_threshold) {
    out.row_sums.assign(n, 0.0);
    if (v) out.numerator = Matrix(n, v->cols());
    parallel_for(n, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        auto qi = q.row(i);
        double s = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          const double a = detail::checked_exp(dot(qi, k.row(j)), shift, i, j);
          s += a;
          if (v) {
            auto dst = out.numerator.row(i);
            auto vj = v->row(j);
            for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += a * vj[t];
          }
        }
        out.row_sums[i] = s;
      }
    });
    return out;
  }

  const std::size_t top = (n + 1) / 2;
  const Matrix q1 = q.row_slice(0, top);
  const Matrix q2 = q.row_slice(top, n);
  const Matrix k1 = k.row_slice(0, top);
  const Matrix k2 = k.row_slice(top, n);
  std::optional<Matrix> v1, v2;
  if (v) {
    v1 = v->row_slice(0, top);
    v2 = v->row_slice(top, n);
  }

  CausalNode upper = causal_recurse(q1, k1, v ? &*v1 : nullptr, params, shift, 2 * node);
  CausalNode lower = causal_recurse(q2, k2, v ? &*v2 : nullptr, params, shift, 2 * node + 1);

  const std::uint64_t seed = derive_seed(params.seed, {stream::kCausalNode, node});
  const MaskSpec mask = params.offdiag_lsh_mask
                            ? sort_lsh_mask(q2, k1, params.block_size, lsh_for(params, top, seed))
                            : MaskSpec::none(q2.rows(), k1.rows());
  BlockEstimate off = estimate_block(q2, k1, v ? &*v1 : nullptr, mask, params, shift, seed);

  out.offdiag_calls = upper.offdiag_calls + lower.offdiag_calls + 1;
  out.row_sums = std::move(upper.row_sums);
  out.row_sums.reserve(n);
  for (std::size_t i = 0; i < lower.row_sums.size(); ++i)
    out.row_sums.push_back(lower.row_sums[i] + off.row_sums.final[i]);

  if (v) {
    out.numerator = Matrix(n, v->cols());
    for (std::size_t i = 0; i < top; ++i) {
      auto src = upper.numerator.row(i);
      std::copy(src.begin(), src.end(), out.numerator.row(i).begin());
    }
    for (std::size_t i = 0; i < n - top; ++i) {
      auto dst = out.numerator.row(top + i);
      auto a = lower.numerator.row(i);
      auto b = off.numerator.row(i);
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = a[t] + b[t];
    }
  }
  return out;
}

}  // namespace

CausalDiagonal causal_approx_d(const Matrix& q, const Matrix& k, const HyperParams& params) {
  params.validate();
  if (q.rows() != k.rows() || q.cols() != k.cols())
    throw InvalidArgument("causal estimate needs Q and K of equal shape");
  const double shift = resolve_shift(params, q, k);
  CausalNode root = causal_recurse(q, k, nullptr, params, shift, 1);
  return {DiagonalEstimate(std::move(root.row_sums)), root.offdiag_calls};
}

HyperOutput causal_hyper_attention(const AttentionInputs& inputs, const HyperParams& params) {
  params.validate();
  HyperOutput out;
  out.shift = resolve_shift(params, inputs.q, inputs.k);
  CausalNode root = causal_recurse(inputs.q, inputs.k, &inputs.v, params, out.shift, 1);
  out.d_tilde = DiagonalEstimate(std::move(root.row_sums));
  normalize_rows(root.numerator, out.d_tilde.values);
  out.attention = std::move(root.numerator);
  out.mask_used = MaskSpec::none(inputs.n(), inputs.n());
  out.offdiag_calls = root.offdiag_calls;
  return out;
}

}  // namespace hyperattn
