#include "sketchsgd/random.hpp"

#include <cmath>
#include <numbers>

#include "sketchsgd/error.hpp"

namespace sketchsgd {

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw Error(ErrorCode::kInvalidConfig, "uniform_index: bound must be positive");
  // Reject the top partial block so every residue is equally likely.
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % bound;
}

double Rng::normal() {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  double u1 = uniform01();
  while (u1 <= 0.0) u1 = uniform01();
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::vector<std::size_t> Rng::sample_without_replacement(std::span<const std::size_t> pool,
                                                         std::size_t l) {
  if (l > pool.size()) {
    throw Error(ErrorCode::kInvalidConfig, "sample_without_replacement: l exceeds pool size");
  }
  // Partial Fisher-Yates over a copy.
  std::vector<std::size_t> scratch(pool.begin(), pool.end());
  for (std::size_t i = 0; i < l; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(scratch.size() - i));
    std::swap(scratch[i], scratch[j]);
  }
  scratch.resize(l);
  return scratch;
}

}  // namespace sketchsgd
