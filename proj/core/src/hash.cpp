#include "sketchsgd/hash.hpp"

#include "sketchsgd/random.hpp"

namespace sketchsgd {

namespace {
__extension__ typedef unsigned __int128 uint128;
}  // namespace

std::uint64_t mulmod61(std::uint64_t x, std::uint64_t y) noexcept {
  const uint128 p = static_cast<uint128>(x) * y;
  std::uint64_t r = static_cast<std::uint64_t>(p & kMersenne61) + static_cast<std::uint64_t>(p >> 61);
  if (r >= kMersenne61) r -= kMersenne61;
  return r;
}

PolyHash::PolyHash(const std::array<std::uint64_t, 4>& coeffs) noexcept : coeffs_(coeffs) {
  for (auto& c : coeffs_) c %= kMersenne61;
}

std::uint64_t PolyHash::operator()(std::uint64_t x) const noexcept {
  x %= kMersenne61;
  // Horner: ((c3 x + c2) x + c1) x + c0.
  std::uint64_t acc = coeffs_[3];
  for (int i = 2; i >= 0; --i) {
    acc = mulmod61(acc, x) + coeffs_[static_cast<std::size_t>(i)];
    if (acc >= kMersenne61) acc -= kMersenne61;
  }
  return acc;
}

namespace {

PolyHash make_poly(std::uint64_t seed, std::uint64_t row, std::uint64_t which) {
  std::array<std::uint64_t, 4> coeffs{};
  for (std::uint64_t slot = 0; slot < 4; ++slot) {
    const std::uint64_t counter = (row << 3) | (which << 2) | slot;
    // Rejection keeps coefficients uniform over the field.
    std::uint64_t attempt = 0;
    std::uint64_t value = 0;
    do {
      value = derive_seed(seed, counter + (attempt << 40)) >> 3;
      ++attempt;
    } while (value >= kMersenne61);
    coeffs[slot] = value;
  }
  return PolyHash(coeffs);
}

}  // namespace

HashFamily::HashFamily(std::uint64_t seed, std::size_t rows, std::size_t cols) : cols_(cols) {
  bucket_.reserve(rows);
  sign_.reserve(rows);
  for (std::size_t j = 0; j < rows; ++j) {
    bucket_.push_back(make_poly(seed, j, 0));
    sign_.push_back(make_poly(seed, j, 1));
  }
}

}  // namespace sketchsgd
