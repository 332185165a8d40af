#include "hyperattn/approx_d.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "detail.hpp"
#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"
#include "hyperattn/random.hpp"

namespace hyperattn {

void ApproxDParams::validate(std::size_t cols) const {
  if (!(kappa > 0.0)) throw InvalidArgument("kappa must be positive");
  if (!(epsilon > 1.0 / std::pow(kappa, 4.0)))
    throw InvalidArgument("epsilon must exceed 1 / kappa^4");
  if (!(alpha > epsilon * epsilon * kappa))
    throw InvalidArgument("alpha must exceed epsilon^2 * kappa");
  if (!(cap_multiplier > 0.0)) throw InvalidArgument("cap_multiplier must be positive");
  const std::size_t count = sample_count();
  if (count < 1 || count > cols) {
    throw InvalidArgument("sample count must lie in [1, " + std::to_string(cols) + "], got " +
                          std::to_string(count));
  }
  for (std::size_t idx : injected_indices)
    if (idx >= cols) throw InvalidArgument("injected index out of range");
}

std::vector<double> masked_row_sums(const Matrix& q, const Matrix& k, const MaskSpec& mask,
                                    double shift) {
  if (mask.rows() != q.rows() || mask.cols() != k.rows())
    throw InvalidArgument("mask shape does not match Q K^T");
  std::vector<double> sums(q.rows(), 0.0);
  if (mask.is_block()) {
    // Block by block, so each block's keys are gathered once.
    parallel_for(mask.block_count(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t blk = begin; blk < end; ++blk) {
        const auto keys = mask.block_keys(blk);
        const Matrix kb = k.gather_rows(keys);
        for (std::size_t i : mask.block_queries(blk)) {
          auto qi = q.row(i);
          double s = 0.0;
          for (std::size_t r = 0; r < keys.size(); ++r)
            s += detail::checked_exp(dot(qi, kb.row(r)), shift, i, keys[r]);
          sums[i] = s;
        }
      }
    });
    return sums;
  }
  parallel_for(q.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto qi = q.row(i);
      double s = 0.0;
      for (std::size_t j : mask.row_columns(i))
        s += detail::checked_exp(dot(qi, k.row(j)), shift, i, j);
      sums[i] = s;
    }
  });
  return sums;
}

namespace {

double unmasked_row_sum(const Matrix& q, const Matrix& k, const MaskSpec& mask, std::size_t i,
                        double shift, std::vector<char>& scratch) {
  scratch.assign(k.rows(), 0);
  for (std::size_t j : mask.row_columns(i)) scratch[j] = 1;
  auto qi = q.row(i);
  double s = 0.0;
  for (std::size_t j = 0; j < k.rows(); ++j) {
    if (!scratch[j]) s += detail::checked_exp(dot(qi, k.row(j)), shift, i, j);
  }
  return s;
}

std::vector<std::size_t> uniform_indices(std::size_t count, std::size_t range,
                                         std::uint64_t seed) {
  Engine rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, range - 1);
  std::vector<std::size_t> out(count);
  for (auto& idx : out) idx = pick(rng);
  return out;
}

std::vector<std::size_t> subset_without_replacement(std::size_t count, std::size_t range,
                                                    std::uint64_t seed) {
  std::vector<std::size_t> all(range);
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<std::size_t> out;
  out.reserve(count);
  Engine rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(out), count, rng);
  return out;
}

}  // namespace

TauEstimate estimate_tau(const Matrix& q, const Matrix& k, const MaskSpec& mask, std::size_t m,
                         double shift, std::uint64_t seed) {
  if (m < 1 || m > q.rows()) {
    throw InvalidArgument("tau sample size must lie in [1, " + std::to_string(q.rows()) + "]");
  }
  TauEstimate est;
  est.sample_set = subset_without_replacement(m, q.rows(), derive_seed(seed, {stream::kTau}));
  std::vector<double> sums(m, 0.0);
  parallel_for(m, [&](std::size_t begin, std::size_t end) {
    std::vector<char> scratch;
    for (std::size_t t = begin; t < end; ++t)
      sums[t] = unmasked_row_sum(q, k, mask, est.sample_set[t], shift, scratch);
  });
  est.tau = *std::max_element(sums.begin(), sums.end());
  return est;
}

RowSumEstimate approx_d(const Matrix& q, const Matrix& k, const MaskSpec& mask,
                        const ApproxDParams& params) {
  const std::size_t rows = q.rows();
  const std::size_t cols = k.rows();
  params.validate(cols);
  if (mask.rows() != rows || mask.cols() != cols)
    throw InvalidArgument("mask shape does not match Q K^T");

  const bool theoretical = params.mode == ApproxDMode::Theoretical;
  const std::size_t m = params.sample_count();

  RowSumEstimate est;
  est.masked_part = masked_row_sums(q, k, mask, params.shift);
  if (theoretical) {
    est.tau = estimate_tau(q, k, mask, std::min(m, rows), params.shift, params.seed).tau;
    est.lower_clamp = est.tau / params.kappa;
  }

  const bool fresh = params.fresh_indices_per_row && params.injected_indices.empty();
  if (!params.injected_indices.empty()) {
    est.indices = params.injected_indices;
  } else if (!fresh) {
    est.indices = uniform_indices(m, cols, derive_seed(params.seed, {stream::kColumns}));
  }

  // C_i = c * eps^2 m / (n ln n) * (masked_i + tau / kappa); natural log.
  double cap_scale = std::numeric_limits<double>::infinity();
  if (theoretical && std::isfinite(params.cap_multiplier) && cols > 1) {
    cap_scale = params.cap_multiplier * params.epsilon * params.epsilon *
                static_cast<double>(m) /
                (static_cast<double>(cols) * std::log(static_cast<double>(cols)));
  }

  const double scale = static_cast<double>(cols) / static_cast<double>(m);
  est.unmasked_estimate.assign(rows, 0.0);
  est.final.assign(rows, 0.0);
  parallel_for(rows, [&](std::size_t begin, std::size_t end) {
    std::vector<std::size_t> own;
    for (std::size_t i = begin; i < end; ++i) {
      const std::vector<std::size_t>* idx = &est.indices;
      if (fresh) {
        own = uniform_indices(m, cols, derive_seed(params.seed, {stream::kColumns, i + 1}));
        idx = &own;
      }
      const double cap = cap_scale * (est.masked_part[i] + est.lower_clamp);
      auto qi = q.row(i);
      double s = 0.0;
      for (std::size_t j : *idx) {
        if (mask.contains(i, j)) continue;
        s += std::min(detail::checked_exp(dot(qi, k.row(j)), params.shift, i, j), cap);
      }
      est.unmasked_estimate[i] = scale * s;
      est.final[i] = est.masked_part[i] + std::max(est.unmasked_estimate[i], est.lower_clamp);
    }
  });

  for (std::size_t i = 0; i < rows; ++i) {
    if (!(est.final[i] > 0.0)) {
      throw Error("row-sum estimate for row " + std::to_string(i) +
                  " underflowed to zero; lower the global shift");
    }
  }
  return est;
}

std::vector<double> softmax_column_sq_norms(const Matrix& q, const Matrix& k,
                                            const std::vector<std::size_t>& columns) {
  const std::size_t n = q.rows();
  std::vector<double> log_rowsum(n);
  parallel_for(n, [&](std::size_t begin, std::size_t end) {
    std::vector<double> logits(k.rows());
    for (std::size_t i = begin; i < end; ++i) {
      auto qi = q.row(i);
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < k.rows(); ++j) {
        logits[j] = dot(qi, k.row(j));
        peak = std::max(peak, logits[j]);
      }
      double s = 0.0;
      for (double x : logits) s += std::exp(x - peak);
      log_rowsum[i] = peak + std::log(s);
    }
  });
  std::vector<double> norms(columns.size(), 0.0);
  parallel_for(columns.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      auto kj = k.row(columns[c]);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double p = std::exp(dot(q.row(i), kj) - log_rowsum[i]);
        s += p * p;
      }
      norms[c] = s;
    }
  });
  return norms;
}

KappaAlpha estimate_kappa_alpha(const Matrix& q, const Matrix& k, const MaskSpec& mask,
                                std::size_t probes, std::uint64_t seed) {
  const std::size_t n = q.rows();
  if (probes < 1 || probes > n || probes > k.rows())
    throw InvalidArgument("probe count must lie in [1, n]");
  if (mask.rows() != n || mask.cols() != k.rows())
    throw InvalidArgument("mask shape does not match Q K^T");

  auto pick = [&](std::size_t range, std::uint64_t tag) {
    if (probes == range) {
      std::vector<std::size_t> all(range);
      std::iota(all.begin(), all.end(), std::size_t{0});
      return all;
    }
    return subset_without_replacement(probes, range, derive_seed(seed, {stream::kProbe, tag}));
  };

  const double shift = [&] {
    // Row-independent shift: the ratio max/min is invariant to it.
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < k.rows(); ++j) peak = std::max(peak, dot(q.row(i), k.row(j)));
    return peak;
  }();

  KappaAlpha out;
  const auto rows = pick(n, 1);
  std::vector<double> sums(rows.size());
  parallel_for(rows.size(), [&](std::size_t begin, std::size_t end) {
    std::vector<char> scratch;
    for (std::size_t t = begin; t < end; ++t)
      sums[t] = unmasked_row_sum(q, k, mask, rows[t], shift, scratch);
  });
  const auto [lo, hi] = std::minmax_element(sums.begin(), sums.end());
  if (*hi == 0.0) {
    out.kappa = std::numeric_limits<double>::quiet_NaN();
    out.kappa_status = KappaStatus::Undefined;
  } else if (*lo == 0.0) {
    out.kappa = std::numeric_limits<double>::infinity();
    out.kappa_status = KappaStatus::Infinite;
  } else {
    out.kappa = *hi / *lo;
  }

  const auto cols = pick(k.rows(), 2);
  const auto norms = softmax_column_sq_norms(q, k, cols);
  out.alpha = static_cast<double>(n) * *std::max_element(norms.begin(), norms.end());
  return out;
}

}  // namespace hyperattn
