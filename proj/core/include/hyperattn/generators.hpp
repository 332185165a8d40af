#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "hyperattn/matrix.hpp"

namespace hyperattn {

enum class Generator {
  Gaussian,    // Q, K, V with i.i.d. N(0, 1) entries
  Planted,     // one planted large inner product per query row
  Orthogonal,  // Q, K rows uniform on a sphere: nearly orthogonal pairs
};

Generator parse_generator(std::string_view name);
std::string_view generator_name(Generator g) noexcept;

struct GeneratorSpec {
  Generator kind = Generator::Gaussian;
  /// Multiply Q and K by 1/sqrt(d), so Gaussian entries have variance 1/d.
  bool scale_inv_sqrt_d = false;
  /// Planted inner product (Planted only).
  double planted_value = 10.0;
};

struct PlantedInstance {
  AttentionInputs inputs;
  /// partner[i] is the key row carrying query row i's planted entry. A
  /// permutation, so every column holds exactly one planted entry.
  std::vector<std::size_t> partner;
};

/// Query rows uniform on the unit sphere, key rows N(0, I/d), then
/// K[partner[i]] += value * Q[i]; V is standard Gaussian.
PlantedInstance generate_planted(std::size_t n, std::size_t d, double value, std::uint64_t seed);

AttentionInputs generate_inputs(std::size_t n, std::size_t d, const GeneratorSpec& spec,
                                std::uint64_t seed);

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed);

}  // namespace hyperattn
