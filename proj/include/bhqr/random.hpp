#ifndef BHQR_RANDOM_HPP_
#define BHQR_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace bhqr {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds from one
// user seed so that chains, replications and the jitter each own a stream.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Stream identifiers. Chain k of a sampler uses base + k.
namespace streams {
inline constexpr std::uint64_t kJitter = 1;
inline constexpr std::uint64_t kQrChains = 1000;
inline constexpr std::uint64_t kLogisticChains = 2000;
inline constexpr std::uint64_t kReplications = 3000;
}  // namespace streams

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

// Uniform draw on the open interval (0, 1) with 53 bits of resolution.
template <class URBG>
double uniform_open01(URBG& rng) {
  static_assert(URBG::max() - URBG::min() == ~std::uint64_t{0},
                "uniform_open01 expects a 64-bit generator");
  const std::uint64_t bits = static_cast<std::uint64_t>(rng() - URBG::min()) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

template <class URBG>
double standard_normal(URBG& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(rng);
}

}  // namespace bhqr

#endif  // BHQR_RANDOM_HPP_
