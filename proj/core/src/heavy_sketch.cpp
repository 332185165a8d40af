#include "hyperattn/heavy_sketch.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"
#include "hyperattn/random.hpp"

namespace hyperattn {

SketchParams SketchParams::with_defaults(double tau, std::uint64_t seed) {
  SketchParams p;
  p.tau = tau;
  p.repetitions = 7;
  p.sketch_rows = 8 * static_cast<std::size_t>(std::ceil(tau));
  p.seed = seed;
  return p;
}

void SketchParams::validate() const {
  if (!(tau > 1.0)) throw InvalidArgument("sketch threshold tau must exceed 1");
  if (repetitions == 0 || repetitions % 2 == 0)
    throw InvalidArgument("sketch repetitions must be odd");
  if (static_cast<double>(sketch_rows) < 8.0 * tau)
    throw InvalidArgument("sketch_rows must be at least 8 * tau, got " +
                          std::to_string(sketch_rows));
  if (!(screen_factor >= 1.0)) throw InvalidArgument("screen_factor must be at least 1");
}

CountSketch::CountSketch(std::size_t n, const SketchParams& params)
    : n_(n),
      repetitions_(params.repetitions),
      sketch_rows_(params.sketch_rows),
      buckets_(params.repetitions * n),
      signs_(params.repetitions * n) {
  for (std::size_t rep = 0; rep < repetitions_; ++rep) {
    Engine rng(derive_seed(params.seed, {stream::kSketch, rep}));
    std::uniform_int_distribution<std::uint32_t> bucket(
        0, static_cast<std::uint32_t>(sketch_rows_ - 1));
    std::bernoulli_distribution coin(0.5);
    for (std::size_t i = 0; i < n_; ++i) {
      buckets_[rep * n_ + i] = bucket(rng);
      signs_[rep * n_ + i] = coin(rng) ? 1 : -1;
    }
  }
}

Matrix CountSketch::apply(const Matrix& x) const {
  if (x.rows() != n_) throw InvalidArgument("CountSketch applied to a matrix of the wrong height");
  Matrix out(repetitions_ * sketch_rows_, x.cols());
  for (std::size_t rep = 0; rep < repetitions_; ++rep) {
    for (std::size_t i = 0; i < n_; ++i) {
      auto dst = out.row(rep * sketch_rows_ + bucket(rep, i));
      const double s = sign(rep, i);
      auto src = x.row(i);
      for (std::size_t t = 0; t < dst.size(); ++t) dst[t] += s * src[t];
    }
  }
  return out;
}

namespace {

double median_in_place(std::vector<double>& values) {
  auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

}  // namespace

std::vector<double> column_energy_estimates(const Matrix& sketch, const SketchParams& params) {
  if (sketch.rows() != params.total_rows())
    throw InvalidArgument("sketch height does not match the sketch parameters");
  std::vector<double> energy(sketch.cols(), 0.0);
  parallel_for(sketch.cols(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> per_rep(params.repetitions);
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t rep = 0; rep < params.repetitions; ++rep) {
        double e = 0.0;
        for (std::size_t h = 0; h < params.sketch_rows; ++h) {
          const double v = sketch(rep * params.sketch_rows + h, j);
          e += v * v;
        }
        per_rep[rep] = e;
      }
      energy[j] = median_in_place(per_rep);
    }
  });
  return energy;
}

HeavySketchResult sketch_heavy_entries(const Matrix& q, const Matrix& k,
                                       const SketchParams& params) {
  params.validate();
  if (q.cols() != k.cols()) throw InvalidArgument("Q and K must have equal column counts");
  const std::size_t n = q.rows();
  const std::size_t cols = k.rows();

  const CountSketch t_sketch(n, params);
  const Matrix tq = t_sketch.apply(q);
  const Matrix sketch = matmul_transposed(tq, k);  // t x cols
  const std::vector<double> energy = column_energy_estimates(sketch, params);

  const double accept_div = 1.5 * params.tau;
  const double screen_div = params.screen_factor * accept_div;

  std::vector<std::vector<std::size_t>> hits(cols);
  std::vector<std::size_t> screened(cols, 0);
  parallel_for(cols, [&](std::size_t begin, std::size_t end) {
    std::vector<double> per_rep(params.repetitions);
    for (std::size_t j = begin; j < end; ++j) {
      const double screen = energy[j] / screen_div;
      const double accept = energy[j] / accept_div;
      auto kj = k.row(j);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t rep = 0; rep < params.repetitions; ++rep) {
          per_rep[rep] = t_sketch.sign(rep, i) *
                         sketch(rep * params.sketch_rows + t_sketch.bucket(rep, i), j);
        }
        const double est = median_in_place(per_rep);
        const double est_sq = est * est;
        if (est_sq == 0.0 || est_sq < screen) continue;
        ++screened[j];
        const double exact = dot(q.row(i), kj);
        const double exact_sq = exact * exact;
        if (exact_sq > 0.0 && exact_sq >= accept) hits[j].push_back(i);
      }
    }
  });

  std::vector<std::pair<std::size_t, std::size_t>> entries;
  SketchStats stats;
  for (std::size_t j = 0; j < cols; ++j) {
    stats.candidates += screened[j];
    for (std::size_t i : hits[j]) entries.emplace_back(i, j);
  }
  std::sort(entries.begin(), entries.end());

  stats.sketch_bytes = (tq.data().size() + sketch.data().size()) * sizeof(double);
  stats.peak_bytes = stats.sketch_bytes + t_sketch.bytes() + energy.size() * sizeof(double) +
                     entries.size() * sizeof(entries[0]) + cols * sizeof(hits[0]) +
                     entries.size() * sizeof(std::size_t);
  return {MaskSpec::sparse(n, cols, std::move(entries)), stats};
}

MaskSpec sketch_heavy_mask(const Matrix& q, const Matrix& k, const SketchParams& params) {
  return sketch_heavy_entries(q, k, params).mask;
}

}  // namespace hyperattn
