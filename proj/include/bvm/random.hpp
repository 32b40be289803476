#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace bvm {

/// Master seed plus stream identifier; mixed into one 64-bit seed.
struct SeedDerivation {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
};

/// SplitMix64 finalizer (Steele, Lea, Flood 2014). A bijection on 64 bits.
[[nodiscard]] constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derived seed = mix(mix(master) + (stream + 1) * golden). For a fixed master
/// the map stream -> seed is a composition of bijections, so distinct streams
/// never collide.
[[nodiscard]] constexpr std::uint64_t derive_seed(SeedDerivation d) noexcept {
  constexpr std::uint64_t golden = 0x9e3779b97f4a7c15ULL;
  return splitmix64_mix(splitmix64_mix(d.master_seed) + (d.stream_id + 1) * golden);
}

[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t master,
                                                  std::uint64_t stream) noexcept {
  return derive_seed(SeedDerivation{master, stream});
}

using Engine = std::mt19937_64;

/// n i.i.d. standard normals from a fresh engine seeded with `seed`.
[[nodiscard]] Eigen::VectorXd standard_normal_vector(std::size_t n, std::uint64_t seed);

/// Fills `out` from an existing engine (used by Monte Carlo kernels that draw
/// many vectors from one stream).
void fill_standard_normal(Engine& engine, Eigen::Ref<Eigen::VectorXd> out);

}  // namespace bvm
