#pragma once

#include <cstdint>
#include <random>
#include <span>

#include "smoothcert/bounds.hpp"

namespace smoothcert::noise {

using Rng = std::mt19937_64;

/// Seed for an independent random substream keyed by (seed, a, b); used as
/// (seed, example index, sample index) so that results do not depend on the
/// order in which samples are evaluated.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b);

inline Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(substream_seed(seed, a, b));
}

/// Adds i.i.d. N(0, sigma^2) or Laplace(0, lambda) noise to every coordinate.
void add_noise(const bounds::NoiseScale& noise, Rng& rng, std::span<double> x);

}  // namespace smoothcert::noise
