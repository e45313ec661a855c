#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace sketchsgd {

// Row-per-sample feature matrix with one label per row (+-1, or a class id
// before a one-vs-all reduction).
struct Dataset {
  std::string name;
  std::size_t dimension = 0;
  std::vector<double> features;  // n x d, row-major
  std::vector<double> labels;
  std::uint64_t checksum = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(features).subspan(i * dimension, dimension);
  }
};

// FNV-1a over (n, d, labels, features) bit patterns.
std::uint64_t compute_checksum(const Dataset& data);

// Throws Error(kDimensionInconsistency) if n == 0 or the matrix shape is off.
void validate(const Dataset& data);

// Two Gaussian blobs with labels drawn +-1 uniformly,
// x = y * (separation / 2) * u + N(0, I) for a seeded random unit direction
// u, so the Bayes error is Phi(-separation / 2).
Dataset synth_data(std::size_t n, std::size_t d, double separation, std::uint64_t seed);

// Text format: one sample per line, label first then d features, whitespace
// separated. Blank lines and lines starting with '#' are skipped.
Dataset load_dataset(const std::filesystem::path& path);
Dataset parse_dataset(const std::string& text, const std::string& name);

// Labels equal to positive_class become +1, all others -1.
Dataset one_vs_all(const Dataset& data, double positive_class);

// Per-feature min-max scaling to [0, 1] with ranges taken from `reference`
// (constant features map to 0).
void normalize_unit_range(Dataset& data, const Dataset& reference);
void append_bias_feature(Dataset& data);

// First n - test_count rows train, the rest test.
std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t test_count);

}  // namespace sketchsgd
