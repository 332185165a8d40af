#include "hyperattn/lsh.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "hyperattn/errors.hpp"
#include "hyperattn/parallel.hpp"
#include "hyperattn/random.hpp"

namespace hyperattn {

void LshParams::validate() const {
  if (bits < 1 || bits > 30) {
    throw InvalidArgument("LSH bit count must be in [1, 30], got " + std::to_string(bits));
  }
}

unsigned default_hash_bits(std::size_t n) noexcept {
  unsigned r = 0;
  while (r < 30 && (std::size_t{1} << r) < n) ++r;
  return std::max(1u, r);
}

HammingSortedLsh::HammingSortedLsh(std::size_t dim, const LshParams& params)
    : dim_(dim), bits_(params.bits), hyperplanes_(params.bits * dim) {
  params.validate();
  if (dim == 0) throw InvalidArgument("LSH dimension must be positive");
  Engine rng(derive_seed(params.seed, {stream::kLsh}));
  std::normal_distribution<double> normal;
  for (double& g : hyperplanes_) g = normal(rng);
}

PointHash HammingSortedLsh::hash(std::span<const double> x) const {
  if (x.size() != dim_) throw InvalidArgument("LSH input has the wrong dimension");
  PointHash h;
  h.zero_vector = std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
  if (h.zero_vector) return h;
  for (unsigned t = 0; t < bits_; ++t) {
    const double proj = dot(x, {hyperplanes_.data() + t * dim_, dim_});
    if (proj > 0.0) h.pattern |= (1u << t);
  }
  h.bucket = gray_decode(h.pattern);
  return h;
}

PointHash hash_point(std::span<const double> x, const LshParams& params) {
  return HammingSortedLsh(x.size(), params).hash(x);
}

double collision_probability(double theta, unsigned r) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw InvalidArgument("angle must lie in [0, pi]");
  return std::pow(1.0 - theta / std::numbers::pi, static_cast<double>(r));
}

double adjacent_bucket_probability(double theta, unsigned r) {
  if (!(theta >= 0.0 && theta <= std::numbers::pi))
    throw InvalidArgument("angle must lie in [0, pi]");
  if (r < 2) throw InvalidArgument("adjacency needs at least two hash bits");
  const double p = theta / std::numbers::pi;
  return 2.0 * p * std::pow(1.0 - p, static_cast<double>(r - 1));
}

namespace {

std::vector<std::size_t> sorted_positions(const Matrix& rows, const HammingSortedLsh& lsh,
                                          std::size_t& zero_rows) {
  std::vector<std::uint32_t> buckets(rows.rows());
  std::vector<char> zero(rows.rows(), 0);
  parallel_for(rows.rows(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const PointHash h = lsh.hash(rows.row(i));
      buckets[i] = h.bucket;
      zero[i] = h.zero_vector ? 1 : 0;
    }
  });
  zero_rows = static_cast<std::size_t>(std::count(zero.begin(), zero.end(), 1));

  std::vector<std::size_t> order(rows.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return buckets[a] < buckets[b]; });
  std::vector<std::size_t> position(rows.rows());
  for (std::size_t pos = 0; pos < order.size(); ++pos) position[order[pos]] = pos;
  return position;
}

}  // namespace

MaskSpec sort_lsh_mask(const Matrix& q, const Matrix& k, std::size_t block_size,
                       const LshParams& params, SortLshDiagnostics* diagnostics) {
  if (block_size == 0) throw InvalidArgument("block size must be at least 1");
  if (q.cols() != k.cols()) throw InvalidArgument("Q and K must have equal column counts");
  const HammingSortedLsh lsh(q.cols(), params);
  SortLshDiagnostics diag;
  auto perm_q = sorted_positions(q, lsh, diag.zero_query_rows);
  auto perm_k = sorted_positions(k, lsh, diag.zero_key_rows);
  if (diagnostics) *diagnostics = diag;
  return MaskSpec::block_perm(std::move(perm_q), std::move(perm_k), block_size);
}

}  // namespace hyperattn
