#include "sketchsgd/count_sketch.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "bytes.hpp"
#include "sketchsgd/error.hpp"

namespace sketchsgd {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'K', '1'};
constexpr std::uint16_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 2 + 8 + 4 + 4 + 8;

}  // namespace

void validate(const SketchConfig& config) {
  if (config.dimension == 0 || config.rows == 0 || config.cols == 0) {
    throw Error(ErrorCode::kInvalidConfig,
                "sketch config needs d, r, c >= 1 (got d=" + std::to_string(config.dimension) +
                    ", r=" + std::to_string(config.rows) + ", c=" + std::to_string(config.cols) + ")");
  }
  constexpr std::size_t kU32Max = std::numeric_limits<std::uint32_t>::max();
  if (config.rows > kU32Max || config.cols > kU32Max) {
    throw Error(ErrorCode::kInvalidConfig, "sketch rows and cols must fit in 32 bits");
  }
  const std::size_t max_cells = std::numeric_limits<std::size_t>::max() / sizeof(double);
  if (config.rows > max_cells / config.cols) {
    throw Error(ErrorCode::kInvalidConfig, "sketch table size overflows");
  }
}

SketchDims size_for(std::size_t k, std::size_t dimension, double delta, const SizeConstants& constants) {
  if (k == 0 || dimension == 0 || k > dimension) {
    throw Error(ErrorCode::kInvalidConfig, "size_for requires 0 < k <= d");
  }
  if (!(delta > 0.0 && delta < 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "size_for requires 0 < delta < 1");
  }
  if (!(constants.row_factor > 0.0) || constants.col_factor == 0) {
    throw Error(ErrorCode::kInvalidConfig, "size_for constants must be positive");
  }
  const double rows = std::ceil(constants.row_factor * std::log2(static_cast<double>(dimension) / delta));
  return SketchDims{std::max<std::size_t>(1, static_cast<std::size_t>(rows)), constants.col_factor * k};
}

CountSketch::CountSketch(const SketchConfig& config) : config_(config) {
  validate(config_);
  hashes_ = HashFamily(config_.seed, config_.rows, config_.cols);
  table_.assign(config_.rows * config_.cols, 0.0);
}

CountSketch CountSketch::from_dense(const SketchConfig& config, std::span<const double> values) {
  CountSketch s(config);
  s.accumulate(values);
  return s;
}

CountSketch CountSketch::from_sparse(const SketchConfig& config, std::span<const SparseEntry> entries) {
  CountSketch s(config);
  for (const auto& e : entries) s.accumulate(e.index, e.value);
  return s;
}

void CountSketch::check_index(std::size_t index) const {
  if (index >= config_.dimension) {
    throw Error(ErrorCode::kIndexOutOfRange, "sketch index " + std::to_string(index) +
                                                 " out of range for dimension " +
                                                 std::to_string(config_.dimension));
  }
}

void CountSketch::accumulate(std::size_t index, double weight) {
  check_index(index);
  for (std::size_t j = 0; j < config_.rows; ++j) {
    table_[j * config_.cols + hashes_.bucket(j, index)] += hashes_.sign(j, index) * weight;
  }
}

void CountSketch::accumulate(std::span<const double> dense) {
  if (dense.size() != config_.dimension) {
    throw Error(ErrorCode::kIndexOutOfRange, "dense vector of length " + std::to_string(dense.size()) +
                                                 " does not match sketch dimension " +
                                                 std::to_string(config_.dimension));
  }
  for (std::size_t i = 0; i < dense.size(); ++i) {
    if (dense[i] != 0.0) accumulate(i, dense[i]);
  }
}

double median_inplace(std::span<double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 0.0;
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

double CountSketch::point_estimate(std::size_t index) const {
  check_index(index);
  std::vector<double> estimates(config_.rows);
  for (std::size_t j = 0; j < config_.rows; ++j) {
    estimates[j] = hashes_.sign(j, index) * table_[j * config_.cols + hashes_.bucket(j, index)];
  }
  return median_inplace(estimates);
}

std::vector<double> CountSketch::estimate_all() const {
  std::vector<double> out(config_.dimension);
  std::vector<double> estimates(config_.rows);
  for (std::size_t i = 0; i < config_.dimension; ++i) {
    for (std::size_t j = 0; j < config_.rows; ++j) {
      estimates[j] = hashes_.sign(j, i) * table_[j * config_.cols + hashes_.bucket(j, i)];
    }
    out[i] = median_inplace(estimates);
  }
  return out;
}

double CountSketch::l2_squared_estimate() const {
  std::vector<double> row_sums(config_.rows, 0.0);
  for (std::size_t j = 0; j < config_.rows; ++j) {
    double s = 0.0;
    for (std::size_t b = 0; b < config_.cols; ++b) {
      const double v = table_[j * config_.cols + b];
      s += v * v;
    }
    row_sums[j] = s;
  }
  return median_inplace(row_sums);
}

CountSketch& CountSketch::merge_from(const CountSketch& other) {
  if (!(config_ == other.config_)) {
    throw Error(ErrorCode::kConfigMismatch, "cannot merge sketches with different (d, r, c, seed)");
  }
  for (std::size_t i = 0; i < table_.size(); ++i) table_[i] += other.table_[i];
  return *this;
}

CountSketch& CountSketch::scale_by(double alpha) {
  if (!std::isfinite(alpha)) throw Error(ErrorCode::kNonFiniteScalar, "sketch scale factor must be finite");
  for (auto& v : table_) v *= alpha;
  return *this;
}

void CountSketch::clear() noexcept { std::fill(table_.begin(), table_.end(), 0.0); }

CountSketch merge(const CountSketch& a, const CountSketch& b) {
  CountSketch out = a;
  out.merge_from(b);
  return out;
}

CountSketch scale(const CountSketch& sketch, double alpha) {
  CountSketch out = sketch;
  out.scale_by(alpha);
  return out;
}

CountSketch merge_all(std::span<const CountSketch> sketches, double alpha) {
  if (sketches.empty()) throw Error(ErrorCode::kInvalidConfig, "merge_all needs at least one sketch");
  CountSketch out = sketches.front();
  for (std::size_t i = 1; i < sketches.size(); ++i) out.merge_from(sketches[i]);
  if (alpha != 1.0) out.scale_by(alpha);
  return out;
}

std::size_t CountSketch::serialized_size(std::size_t rows, std::size_t cols) noexcept {
  return kHeaderBytes + 8 * rows * cols;
}

std::vector<std::byte> CountSketch::serialize() const {
  std::vector<std::byte> out;
  out.reserve(serialized_size(config_.rows, config_.cols));
  detail::ByteWriter w(out);
  for (char ch : kMagic) w.put_u8(static_cast<std::uint8_t>(ch));
  w.put_u16(kVersion);
  w.put_u64(config_.dimension);
  w.put_u32(static_cast<std::uint32_t>(config_.rows));
  w.put_u32(static_cast<std::uint32_t>(config_.cols));
  w.put_u64(config_.seed);
  for (double v : table_) w.put_f64(v);
  return out;
}

CountSketch CountSketch::deserialize(std::span<const std::byte> bytes) {
  detail::ByteReader r(bytes);
  for (char ch : kMagic) {
    if (r.get_u8() != static_cast<std::uint8_t>(ch)) {
      throw Error(ErrorCode::kCorruptMessage, "bad sketch magic");
    }
  }
  const std::uint16_t version = r.get_u16();
  if (version != kVersion) {
    throw Error(ErrorCode::kCorruptMessage, "unsupported sketch version " + std::to_string(version));
  }
  SketchConfig config;
  config.dimension = static_cast<std::size_t>(r.get_u64());
  config.rows = r.get_u32();
  config.cols = r.get_u32();
  config.seed = r.get_u64();
  validate(config);
  if (r.remaining() != 8 * config.rows * config.cols) {
    throw Error(ErrorCode::kCorruptMessage, "sketch payload length does not match r*c");
  }
  CountSketch s(config);
  for (auto& v : s.table_) v = r.get_f64();
  return s;
}

}  // namespace sketchsgd
