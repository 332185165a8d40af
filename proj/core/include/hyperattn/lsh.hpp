#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperattn/mask.hpp"
#include "hyperattn/matrix.hpp"

namespace hyperattn {

struct LshParams {
  unsigned bits = 1;       // r; the hash has 2^r buckets
  std::uint64_t seed = 0;  // hyperplanes are drawn from this seed

  void validate() const;
};

/// r = ceil(log2 n), clamped to [1, 30].
unsigned default_hash_bits(std::size_t n) noexcept;

constexpr std::uint32_t gray_encode(std::uint32_t index) noexcept { return index ^ (index >> 1); }

constexpr std::uint32_t gray_decode(std::uint32_t code) noexcept {
  std::uint32_t index = code;
  for (std::uint32_t shift = 1; shift < 32; shift <<= 1) index ^= index >> shift;
  return index;
}

struct PointHash {
  std::uint32_t bucket = 0;
  std::uint32_t pattern = 0;  // raw sign bits, bit t = [<x, g_t> > 0]
  bool zero_vector = false;
};

/// Hamming sorted LSH: r sign-random-projection bits, with buckets numbered
/// in Gray-code order so that index-adjacent buckets (mod 2^r) hold sign
/// patterns that differ in exactly one bit.
class HammingSortedLsh {
 public:
  HammingSortedLsh(std::size_t dim, const LshParams& params);

  PointHash hash(std::span<const double> x) const;
  std::size_t dim() const noexcept { return dim_; }
  unsigned bits() const noexcept { return bits_; }
  std::size_t bucket_count() const noexcept { return std::size_t{1} << bits_; }

 private:
  std::size_t dim_;
  unsigned bits_;
  std::vector<double> hyperplanes_;  // bits x dim, row-major
};

/// Hashes one point with freshly derived hyperplanes. The zero vector maps
/// to bucket 0 with zero_vector set.
PointHash hash_point(std::span<const double> x, const LshParams& params);

/// Pr[H(x) = H(y)] = (1 - theta/pi)^r.
double collision_probability(double theta, unsigned r);
/// Pr[H(x) = H(y) +- 1 mod 2^r] = (2 theta / pi) (1 - theta/pi)^(r-1), r >= 2.
double adjacent_bucket_probability(double theta, unsigned r);

struct SortLshDiagnostics {
  std::size_t zero_query_rows = 0;
  std::size_t zero_key_rows = 0;
};

/// sortLSH: hashes every row of Q and K with one shared hash function,
/// stably sorts each side by (bucket, row index), and returns the
/// block-diagonal mask under those permutations. Q and K may have different
/// row counts (off-diagonal causal blocks).
MaskSpec sort_lsh_mask(const Matrix& q, const Matrix& k, std::size_t block_size,
                       const LshParams& params, SortLshDiagnostics* diagnostics = nullptr);

}  // namespace hyperattn
