#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace sketchsgd {

inline constexpr std::uint64_t kMersenne61 = (std::uint64_t{1} << 61) - 1;

// x * y mod 2^61 - 1 for x, y < 2^61 - 1.
std::uint64_t mulmod61(std::uint64_t x, std::uint64_t y) noexcept;

// Degree-3 polynomial over GF(2^61 - 1); a 4-wise independent family when
// the coefficients are uniform.
class PolyHash {
 public:
  PolyHash() = default;
  explicit PolyHash(const std::array<std::uint64_t, 4>& coeffs) noexcept;

  std::uint64_t operator()(std::uint64_t x) const noexcept;

  const std::array<std::uint64_t, 4>& coefficients() const noexcept { return coeffs_; }

 private:
  std::array<std::uint64_t, 4> coeffs_{};
};

// Per-row bucket and sign hashes of a Count Sketch. Every coefficient is a
// pure function of (seed, row, slot), so any party holding the seed rebuilds
// the same family.
class HashFamily {
 public:
  HashFamily() = default;
  HashFamily(std::uint64_t seed, std::size_t rows, std::size_t cols);

  std::size_t rows() const noexcept { return bucket_.size(); }
  std::size_t cols() const noexcept { return cols_; }

  std::size_t bucket(std::size_t row, std::uint64_t index) const noexcept {
    return static_cast<std::size_t>(bucket_[row](index) % cols_);
  }
  // Exactly -1 or +1.
  int sign(std::size_t row, std::uint64_t index) const noexcept {
    return (sign_[row](index) & 1U) ? 1 : -1;
  }

 private:
  std::size_t cols_ = 0;
  std::vector<PolyHash> bucket_;
  std::vector<PolyHash> sign_;
};

}  // namespace sketchsgd
