#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sketchsgd/hash.hpp"
#include "sketchsgd/sparse_vector.hpp"

namespace sketchsgd {

struct SketchConfig {
  std::size_t dimension = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::uint64_t seed = 0;

  // Sketches are mergeable iff their configs compare equal.
  friend bool operator==(const SketchConfig&, const SketchConfig&) = default;
};

// Throws Error(kInvalidConfig) on zero or overflowing dimensions.
void validate(const SketchConfig& config);

struct SketchDims {
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const noexcept { return rows * cols; }
  friend bool operator==(const SketchDims&, const SketchDims&) = default;
};

// rows = ceil(row_factor * log2(d / delta)), cols = col_factor * k.
struct SizeConstants {
  double row_factor = 1.0;
  std::size_t col_factor = 6;
};

SketchDims size_for(std::size_t k, std::size_t dimension, double delta,
                    const SizeConstants& constants = {});

// Count Sketch of a d-dimensional real vector: an r x c table of float64
// accumulators. Row j adds s_j(i) * w to cell h_j(i) for every update (i, w).
// The table is linear in the sketched vector, so sketches built with the same
// config merge by addition.
class CountSketch {
 public:
  CountSketch() = default;
  explicit CountSketch(const SketchConfig& config);

  static CountSketch from_dense(const SketchConfig& config, std::span<const double> values);
  static CountSketch from_sparse(const SketchConfig& config, std::span<const SparseEntry> entries);

  const SketchConfig& config() const noexcept { return config_; }
  const HashFamily& hashes() const noexcept { return hashes_; }
  std::size_t dimension() const noexcept { return config_.dimension; }
  std::size_t rows() const noexcept { return config_.rows; }
  std::size_t cols() const noexcept { return config_.cols; }
  std::size_t size() const noexcept { return table_.size(); }

  // Row-major r x c cells.
  std::span<const double> table() const noexcept { return table_; }
  double cell(std::size_t row, std::size_t col) const noexcept { return table_[row * config_.cols + col]; }

  void accumulate(std::size_t index, double weight);
  void accumulate(std::span<const double> dense);

  // Median over rows of s_j(i) * S[j, h_j(i)].
  double point_estimate(std::size_t index) const;
  // Every point estimate, a dense O(d r) scan.
  std::vector<double> estimate_all() const;
  // Median over rows of the row's sum of squared cells.
  double l2_squared_estimate() const;

  // Element-wise table addition; throws Error(kConfigMismatch).
  CountSketch& merge_from(const CountSketch& other);
  // Throws Error(kNonFiniteScalar).
  CountSketch& scale_by(double alpha);

  void clear() noexcept;

  // Little-endian "CSK1" wire format; round trips are bit exact.
  std::vector<std::byte> serialize() const;
  static CountSketch deserialize(std::span<const std::byte> bytes);
  static std::size_t serialized_size(std::size_t rows, std::size_t cols) noexcept;

  friend bool operator==(const CountSketch& a, const CountSketch& b) {
    return a.config_ == b.config_ && a.table_ == b.table_;
  }

 private:
  void check_index(std::size_t index) const;

  SketchConfig config_;
  HashFamily hashes_;
  std::vector<double> table_;
};

CountSketch merge(const CountSketch& a, const CountSketch& b);
CountSketch scale(const CountSketch& sketch, double alpha);

// Fixed left-to-right reduction sum(sketches) * alpha; sketches must be nonempty.
CountSketch merge_all(std::span<const CountSketch> sketches, double alpha = 1.0);

// Median with the mean of the two middle values for even counts. Reorders values.
double median_inplace(std::span<double> values);

}  // namespace sketchsgd
