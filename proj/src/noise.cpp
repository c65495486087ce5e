#include "smoothcert/noise.hpp"

#include <cmath>

namespace smoothcert::noise {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ (b * 0xd1b54a32d192ed03ULL));
}

void add_noise(const bounds::NoiseScale& noise, Rng& rng, std::span<double> x) {
  if (noise.kind() == bounds::NoiseKind::gaussian) {
    std::normal_distribution<double> normal(0.0, noise.scale());
    for (double& v : x) v += normal(rng);
    return;
  }
  // Inverse CDF of Laplace(0, lambda) on u in (-1/2, 1/2).
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  for (double& v : x) {
    double u = uniform(rng);
    while (u == -0.5) u = uniform(rng);
    v -= noise.scale() * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
  }
}

}  // namespace smoothcert::noise
