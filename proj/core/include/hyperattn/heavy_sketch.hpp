#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "hyperattn/mask.hpp"
#include "hyperattn/matrix.hpp"

namespace hyperattn {

struct SketchParams {
  double tau = 2.0;              // heaviness threshold: (QK^T)_ij^2 >= ||QK^T e_j||^2 / tau
  std::size_t repetitions = 7;   // independent CountSketch repetitions (median trick)
  std::size_t sketch_rows = 16;  // buckets per repetition
  std::uint64_t seed = 0;
  // Candidates whose sketched square clears energy / (screen_factor * 1.5 tau)
  // are evaluated exactly before the 1.5 tau acceptance test.
  double screen_factor = 2.0;

  /// repetitions = 7, sketch_rows = 8 * ceil(tau).
  static SketchParams with_defaults(double tau, std::uint64_t seed);
  void validate() const;
  std::size_t total_rows() const noexcept { return repetitions * sketch_rows; }
};

/// CountSketch T over the n query rows: repetition rho sends row i to bucket
/// h_rho(i) with sign s_rho(i).
class CountSketch {
 public:
  CountSketch(std::size_t n, const SketchParams& params);

  /// T * x for an n x d matrix x; result is (repetitions * sketch_rows) x d.
  Matrix apply(const Matrix& x) const;

  std::size_t bucket(std::size_t rep, std::size_t i) const noexcept {
    return buckets_[rep * n_ + i];
  }
  double sign(std::size_t rep, std::size_t i) const noexcept {
    return signs_[rep * n_ + i] > 0 ? 1.0 : -1.0;
  }
  std::size_t n() const noexcept { return n_; }
  std::size_t bytes() const noexcept {
    return buckets_.size() * sizeof(std::uint32_t) + signs_.size() * sizeof(std::int8_t);
  }

 private:
  std::size_t n_;
  std::size_t repetitions_;
  std::size_t sketch_rows_;
  std::vector<std::uint32_t> buckets_;
  std::vector<std::int8_t> signs_;
};

/// Median over repetitions of the per-repetition bucket energy of each
/// column of the t x n sketch (T Q) K^T.
std::vector<double> column_energy_estimates(const Matrix& sketch, const SketchParams& params);

struct SketchStats {
  std::size_t sketch_bytes = 0;  // T Q plus (T Q) K^T
  std::size_t peak_bytes = 0;    // every buffer live during mask construction
  std::size_t candidates = 0;    // entries passing the sketch screen
};

struct HeavySketchResult {
  MaskSpec mask;
  SketchStats stats;
};

/// Sketch-based heavy-entry mask. Forms T Q and (T Q) K^T, never Q K^T.
HeavySketchResult sketch_heavy_entries(const Matrix& q, const Matrix& k,
                                       const SketchParams& params);
MaskSpec sketch_heavy_mask(const Matrix& q, const Matrix& k, const SketchParams& params);

}  // namespace hyperattn
