#include "hyperattn/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "hyperattn/errors.hpp"
#include "hyperattn/random.hpp"

namespace hyperattn {

Generator parse_generator(std::string_view name) {
  if (name == "gaussian") return Generator::Gaussian;
  if (name == "planted") return Generator::Planted;
  if (name == "orthogonal") return Generator::Orthogonal;
  throw InvalidArgument("unknown generator '" + std::string(name) + "'");
}

std::string_view generator_name(Generator g) noexcept {
  switch (g) {
    case Generator::Gaussian:
      return "gaussian";
    case Generator::Planted:
      return "planted";
    case Generator::Orthogonal:
      return "orthogonal";
  }
  return "gaussian";
}

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Engine rng(seed);
  std::normal_distribution<double> normal;
  Matrix m(rows, cols);
  for (double& x : m.data()) x = normal(rng);
  return m;
}

namespace {

Matrix sphere_rows(std::size_t rows, std::size_t cols, double radius, std::uint64_t seed) {
  Matrix m = gaussian_matrix(rows, cols, seed);
  for (std::size_t i = 0; i < rows; ++i) {
    auto r = m.row(i);
    const double len = norm2(r);
    for (double& x : r) x *= radius / len;
  }
  return m;
}

}  // namespace

PlantedInstance generate_planted(std::size_t n, std::size_t d, double value, std::uint64_t seed) {
  if (n == 0 || d == 0) throw InvalidArgument("generator needs positive n and d");
  Matrix q = sphere_rows(n, d, 1.0, derive_seed(seed, {stream::kGenerator, 1}));
  Matrix k = gaussian_matrix(n, d, derive_seed(seed, {stream::kGenerator, 2}));
  const double bg = 1.0 / std::sqrt(static_cast<double>(d));
  for (double& x : k.data()) x *= bg;

  std::vector<std::size_t> partner(n);
  std::iota(partner.begin(), partner.end(), std::size_t{0});
  Engine rng(derive_seed(seed, {stream::kGenerator, 3}));
  std::shuffle(partner.begin(), partner.end(), rng);
  for (std::size_t i = 0; i < n; ++i) {
    auto kr = k.row(partner[i]);
    auto qi = q.row(i);
    for (std::size_t t = 0; t < d; ++t) kr[t] += value * qi[t];
  }
  Matrix v = gaussian_matrix(n, d, derive_seed(seed, {stream::kGenerator, 4}));
  return {AttentionInputs(std::move(q), std::move(k), std::move(v)), std::move(partner)};
}

AttentionInputs generate_inputs(std::size_t n, std::size_t d, const GeneratorSpec& spec,
                                std::uint64_t seed) {
  if (n == 0 || d == 0) throw InvalidArgument("generator needs positive n and d");
  AttentionInputs in;
  switch (spec.kind) {
    case Generator::Gaussian:
      in = AttentionInputs(gaussian_matrix(n, d, derive_seed(seed, {stream::kGenerator, 1})),
                           gaussian_matrix(n, d, derive_seed(seed, {stream::kGenerator, 2})),
                           gaussian_matrix(n, d, derive_seed(seed, {stream::kGenerator, 4})));
      break;
    case Generator::Planted:
      in = generate_planted(n, d, spec.planted_value, seed).inputs;
      break;
    case Generator::Orthogonal: {
      // Radius d^(1/4): inner products of independent rows have unit variance.
      const double radius = std::pow(static_cast<double>(d), 0.25);
      in = AttentionInputs(sphere_rows(n, d, radius, derive_seed(seed, {stream::kGenerator, 1})),
                           sphere_rows(n, d, radius, derive_seed(seed, {stream::kGenerator, 2})),
                           gaussian_matrix(n, d, derive_seed(seed, {stream::kGenerator, 4})));
      break;
    }
  }
  if (spec.scale_inv_sqrt_d) {
    const double s = 1.0 / std::sqrt(static_cast<double>(d));
    for (double& x : in.q.data()) x *= s;
    for (double& x : in.k.data()) x *= s;
  }
  return in;
}

}  // namespace hyperattn
