#include "hyperattn/sampler.hpp"

#include <cmath>
#include <random>

#include "detail.hpp"
#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"
#include "hyperattn/random.hpp"

namespace hyperattn {

RowNormSampler build_sampler(const Matrix& v, std::size_t m, std::uint64_t seed,
                             const std::optional<std::vector<std::size_t>>& injected) {
  const std::size_t n = v.rows();
  RowNormSampler s;
  if (injected) {
    if (injected->empty()) throw InvalidArgument("injected index list is empty");
    for (std::size_t idx : *injected)
      if (idx >= n) throw InvalidArgument("injected index out of range");
    s.indices = *injected;
    const double w = std::sqrt(static_cast<double>(n) / static_cast<double>(s.indices.size()));
    s.weights.assign(s.indices.size(), w);
    return s;
  }
  if (m == 0) throw InvalidArgument("sampler needs at least one sample");

  std::vector<double> sq(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = dot(v.row(i), v.row(i));
    sq[i] = r;
    total += r;
  }
  if (total == 0.0) throw InvalidArgument("cannot sample rows of an all-zero V");

  std::discrete_distribution<std::size_t> pick(sq.begin(), sq.end());
  Engine rng(derive_seed(seed, {stream::kSampler}));
  const double fro = std::sqrt(total);
  const double root_m = std::sqrt(static_cast<double>(m));
  s.indices.resize(m);
  s.weights.resize(m);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t idx = pick(rng);
    s.indices[r] = idx;
    s.weights[r] = fro / (root_m * std::sqrt(sq[idx]));
  }
  return s;
}

Matrix sampled_rows(const Matrix& v, const RowNormSampler& s) {
  Matrix sv(s.m(), v.cols());
  for (std::size_t r = 0; r < s.m(); ++r) {
    auto src = v.row(s.indices[r]);
    auto dst = sv.row(r);
    for (std::size_t t = 0; t < dst.size(); ++t) dst[t] = s.weights[r] * src[t];
  }
  return sv;
}

Matrix sampled_attention_product(const Matrix& q, const Matrix& k, const Matrix& v,
                                 const RowNormSampler& s, double shift,
                                 const MaskSpec* exclude) {
  if (q.cols() != k.cols() || k.rows() != v.rows())
    throw InvalidArgument("sampled product: Q, K, V shapes disagree");
  if (exclude && (exclude->rows() != q.rows() || exclude->cols() != k.rows()))
    throw InvalidArgument("sampled product: mask shape does not match Q K^T");
  const Matrix sv = sampled_rows(v, s);
  const Matrix ks = k.gather_rows(s.indices);
  Matrix out(q.rows(), v.cols());
  parallel_for(q.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto qi = q.row(i);
      auto dst = out.row(i);
      for (std::size_t r = 0; r < s.m(); ++r) {
        if (exclude && exclude->contains(i, s.indices[r])) continue;
        // Column r of A S^T times row r of S V.
        const double a = detail::checked_exp(dot(qi, ks.row(r)), shift, i, s.indices[r]) *
                         s.weights[r];
        auto svr = sv.row(r);
        for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += a * svr[t];
      }
    }
  });
  return out;
}

Matrix apply_sampled_attention(const Matrix& q, const Matrix& k, const Matrix& v,
                               const DiagonalEstimate& d_tilde, const RowNormSampler& s,
                               double shift, const MaskSpec* exclude) {
  if (d_tilde.size() != q.rows()) throw InvalidArgument("diagonal estimate has the wrong length");
  Matrix out = sampled_attention_product(q, k, v, s, shift, exclude);
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (double& x : out.row(i)) x /= d_tilde[i];
  return out;
}

Matrix masked_attention_product(const Matrix& q, const Matrix& k, const Matrix& v,
                                const MaskSpec& mask, double shift) {
  if (mask.rows() != q.rows() || mask.cols() != k.rows() || k.rows() != v.rows())
    throw InvalidArgument("masked product: shapes disagree");
  Matrix out(q.rows(), v.cols());
  if (mask.is_block()) {
    // Block by block, so each block's keys and values are gathered once.
    parallel_for(mask.block_count(), [&](std::size_t begin, std::size_t end) {
      for (std::size_t blk = begin; blk < end; ++blk) {
        const auto keys = mask.block_keys(blk);
        const Matrix kb = k.gather_rows(keys);
        const Matrix vb = v.gather_rows(keys);
        for (std::size_t i : mask.block_queries(blk)) {
          auto qi = q.row(i);
          auto dst = out.row(i);
          for (std::size_t r = 0; r < keys.size(); ++r) {
            const double a = detail::checked_exp(dot(qi, kb.row(r)), shift, i, keys[r]);
            auto vr = vb.row(r);
            for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += a * vr[t];
          }
        }
      }
    });
    return out;
  }
  parallel_for(q.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto qi = q.row(i);
      auto dst = out.row(i);
      for (std::size_t j : mask.row_columns(i)) {
        const double a = detail::checked_exp(dot(qi, k.row(j)), shift, i, j);
        auto vj = v.row(j);
        for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += a * vj[t];
      }
    }
  });
  return out;
}

}  // namespace hyperattn
