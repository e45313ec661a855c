#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sketchsgd {

struct SparseEntry {
  std::size_t index = 0;
  double value = 0.0;

  friend bool operator==(const SparseEntry&, const SparseEntry&) = default;
};

// At most k (index, value) pairs over a d-dimensional space, indices strictly
// increasing.
class KSparseVector {
 public:
  KSparseVector() = default;
  // Sorts entries by index; throws on duplicates or indices >= dimension.
  KSparseVector(std::size_t dimension, std::vector<SparseEntry> entries);

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::span<const SparseEntry> entries() const noexcept { return entries_; }

  std::vector<std::size_t> indices() const;
  std::vector<double> to_dense() const;
  // Number of entries whose value is nonzero.
  std::size_t nonzeros() const noexcept;
  double squared_norm() const noexcept;

  friend bool operator==(const KSparseVector&, const KSparseVector&) = default;

 private:
  std::size_t dimension_ = 0;
  std::vector<SparseEntry> entries_;
};

}  // namespace sketchsgd
