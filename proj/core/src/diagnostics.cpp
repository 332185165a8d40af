#include "hyperattn/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hyperattn/errors.hpp"
#include "hyperattn/exact.hpp"
#include "hyperattn/parallel.hpp"
#include "hyperattn/random.hpp"
#include "hyperattn/spectral.hpp"

namespace hyperattn {

namespace {

// log of the (optionally causal) row sums of exp(Q K^T - shift), without overflow.
std::vector<double> log_row_sums(const Matrix& q, const Matrix& k, double shift, bool causal) {
  std::vector<double> out(q.rows());
  parallel_for(q.rows(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> logits(k.rows());
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t limit = causal ? i + 1 : k.rows();
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < limit; ++j) {
        logits[j] = dot(q.row(i), k.row(j));
        peak = std::max(peak, logits[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < limit; ++j) total += std::exp(logits[j] - peak);
      out[i] = peak + std::log(total) - shift;
    }
  });
  return out;
}

// r_i = D_i / d~_i.
std::vector<double> row_ratios(const std::vector<double>& log_d, const DiagonalEstimate& d_tilde) {
  if (d_tilde.size() != log_d.size()) throw InvalidArgument("row-sum estimate has the wrong length");
  std::vector<double> r(log_d.size());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::exp(log_d[i] - std::log(d_tilde[i]));
  return r;
}

PowerIterationOptions power_options(std::uint64_t seed) {
  PowerIterationOptions opts;
  opts.seed = derive_seed(seed, {stream::kPowerIteration});
  return opts;
}

double max_column_sq_norm(const Matrix& p, std::size_t exclude_prefix) {
  std::vector<double> norms(p.cols(), 0.0);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    auto pi = p.row(i);
    for (std::size_t j = 0; j < p.cols(); ++j) norms[j] += pi[j] * pi[j];
  }
  if (exclude_prefix >= norms.size()) throw InvalidArgument("column prefix covers every column");
  return *std::max_element(norms.begin() + static_cast<std::ptrdiff_t>(exclude_prefix), norms.end());
}

double unmasked_kappa(const Matrix& q, const Matrix& k, const MaskSpec& mask,
                      const std::vector<double>& log_d, const Matrix& p) {
  const double top = *std::max_element(log_d.begin(), log_d.end());
  std::vector<double> sums(q.rows(), 0.0);
  for (std::size_t i = 0; i < q.rows(); ++i) {
    double frac = 0.0;
    auto pi = p.row(i);
    for (std::size_t j = 0; j < k.rows(); ++j)
      if (!mask.contains(i, j)) frac += pi[j];
    sums[i] = std::exp(log_d[i] - top) * frac;
  }
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  if (*hi == 0.0) return std::numeric_limits<double>::quiet_NaN();
  if (*lo == 0.0) return std::numeric_limits<double>::infinity();
  return *hi / *lo;
}

SpectralReport measure(const AttentionInputs& inputs, const HyperOutput& out,
                       const HyperParams& params, double epsilon, bool causal,
                       const MaskSpec* mask) {
  SpectralReport rep;
  rep.causal = causal;
  rep.seed = params.seed;
  rep.n = inputs.n();
  rep.d = inputs.d();
  rep.epsilon = epsilon;
  rep.block_size = params.block_size;
  rep.sample_count = params.sample_count;
  rep.mode = params.complete_cover                        ? "complete_cover"
             : params.mode() == ApproxDMode::Practical ? "practical"
                                                        : "theoretical";

  const Matrix p = softmax_matrix(inputs.q, inputs.k, causal);
  const Matrix att = matmul(p, inputs.v);
  const auto opts = power_options(params.seed);

  rep.err_op = gram_operator_norm(subtract(att, out.attention));
  rep.v_op = gram_operator_norm(inputs.v);
  rep.softmax_op = operator_norm(p, opts).value;
  rep.bound = epsilon * rep.softmax_op * rep.v_op;
  rep.passed = rep.err_op <= rep.bound;

  const auto log_d = log_row_sums(inputs.q, inputs.k, out.shift, causal);
  const auto r = row_ratios(log_d, out.d_tilde);
  std::vector<double> r_minus_one(r.size());
  double fro_sq = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    r_minus_one[i] = r[i] - 1.0;
    double row_sq = 0.0;
    for (double x : p.row(i)) row_sq += x * x;
    fro_sq += r[i] * r[i] * row_sq;
  }
  rep.d_err_op = scaled_operator_norm(p, r_minus_one, opts).value;
  const double scaled_op = scaled_operator_norm(p, r, opts).value;
  rep.srank_hat = fro_sq / (scaled_op * scaled_op);

  rep.alpha_hat = static_cast<double>(rep.n) * max_column_sq_norm(p, 0);
  rep.kappa_hat = mask ? unmasked_kappa(inputs.q, inputs.k, *mask, log_d, p)
                       : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

}  // namespace

SpectralReport verify_spectral(const AttentionInputs& inputs, const MaskSpec& mask,
                               const HyperParams& params, double epsilon) {
  const HyperOutput out = hyper_attention(inputs, mask, params);
  return measure(inputs, out, params, epsilon, false, &mask);
}

SpectralReport verify_spectral_causal(const AttentionInputs& inputs, const HyperParams& params,
                                      double epsilon) {
  const HyperOutput out = causal_hyper_attention(inputs, params);
  return measure(inputs, out, params, epsilon, true, nullptr);
}

DiagonalError diagonal_spectral_error(const Matrix& q, const Matrix& k,
                                      const DiagonalEstimate& d_tilde, double shift) {
  const Matrix p = softmax_matrix(q, k, false);
  const auto r = row_ratios(log_row_sums(q, k, shift, false), d_tilde);
  std::vector<double> scale(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) scale[i] = r[i] - 1.0;
  const auto opts = power_options(0);
  return {scaled_operator_norm(p, scale, opts).value, operator_norm(p, opts).value};
}

double measure_alpha(const Matrix& q, const Matrix& k, std::size_t exclude_prefix) {
  const Matrix p = softmax_matrix(q, k, false);
  return static_cast<double>(q.rows()) * max_column_sq_norm(p, exclude_prefix);
}

std::vector<AlphaRow> alpha_sweep(const std::vector<std::size_t>& n_grid, std::size_t d,
                                  const GeneratorSpec& generator, std::uint64_t seed,
                                  std::size_t exclude_prefix) {
  std::vector<AlphaRow> rows;
  rows.reserve(n_grid.size());
  for (std::size_t n : n_grid) {
    const AttentionInputs in = generate_inputs(n, d, generator, derive_seed(seed, {n}));
    AlphaRow row;
    row.n = n;
    row.alpha = measure_alpha(in.q, in.k, exclude_prefix);
    row.alpha_over_n = row.alpha / static_cast<double>(n);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace hyperattn
