#include "sketchsgd/sparse_vector.hpp"

#include <algorithm>
#include <string>

#include "sketchsgd/error.hpp"

namespace sketchsgd {

KSparseVector::KSparseVector(std::size_t dimension, std::vector<SparseEntry> entries)
    : dimension_(dimension), entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].index >= dimension_) {
      throw Error(ErrorCode::kIndexOutOfRange, "sparse index " + std::to_string(entries_[i].index) +
                                                   " >= dimension " + std::to_string(dimension_));
    }
    if (i > 0 && entries_[i].index == entries_[i - 1].index) {
      throw Error(ErrorCode::kInvalidConfig,
                  "duplicate sparse index " + std::to_string(entries_[i].index));
    }
  }
}

std::vector<std::size_t> KSparseVector::indices() const {
  std::vector<std::size_t> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.index);
  return out;
}

std::vector<double> KSparseVector::to_dense() const {
  std::vector<double> out(dimension_, 0.0);
  for (const auto& e : entries_) out[e.index] = e.value;
  return out;
}

std::size_t KSparseVector::nonzeros() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const SparseEntry& e) { return e.value != 0.0; }));
}

double KSparseVector::squared_norm() const noexcept {
  double s = 0.0;
  for (const auto& e : entries_) s += e.value * e.value;
  return s;
}

}  // namespace sketchsgd
