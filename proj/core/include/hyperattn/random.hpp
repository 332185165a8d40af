#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace hyperattn {

using Engine = std::mt19937_64;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a path of tags.
constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                    std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(seed);
  for (std::uint64_t tag : path) h = mix64(h ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return h;
}

// Stream tags, so that different consumers of one user seed never share draws.
namespace stream {
inline constexpr std::uint64_t kLsh = 1;
inline constexpr std::uint64_t kTau = 2;
inline constexpr std::uint64_t kColumns = 3;
inline constexpr std::uint64_t kSampler = 4;
inline constexpr std::uint64_t kSketch = 5;
inline constexpr std::uint64_t kCausalNode = 6;
inline constexpr std::uint64_t kPowerIteration = 7;
inline constexpr std::uint64_t kGenerator = 8;
inline constexpr std::uint64_t kProbe = 9;
}  // namespace stream

}  // namespace hyperattn
