#include "sketchsgd/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "sketchsgd/error.hpp"
#include "sketchsgd/random.hpp"

namespace sketchsgd {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_mix(std::uint64_t& h, std::uint64_t word) {
  for (int i = 0; i < 8; ++i) {
    h ^= (word >> (8 * i)) & 0xFF;
    h *= kFnvPrime;
  }
}

bool parse_double(std::string_view token, double& out) {
  const char* begin = token.data();
  const char* end = token.data() + token.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::uint64_t compute_checksum(const Dataset& data) {
  std::uint64_t h = kFnvOffset;
  fnv_mix(h, data.size());
  fnv_mix(h, data.dimension);
  for (double v : data.labels) fnv_mix(h, std::bit_cast<std::uint64_t>(v));
  for (double v : data.features) fnv_mix(h, std::bit_cast<std::uint64_t>(v));
  return h;
}

void validate(const Dataset& data) {
  if (data.size() == 0) throw Error(ErrorCode::kDimensionInconsistency, "dataset '" + data.name + "' is empty");
  if (data.dimension == 0) throw Error(ErrorCode::kDimensionInconsistency, "dataset has zero features");
  if (data.features.size() != data.size() * data.dimension) {
    throw Error(ErrorCode::kDimensionInconsistency, "dataset '" + data.name + "' feature matrix is not n x d");
  }
}

Dataset synth_data(std::size_t n, std::size_t d, double separation, std::uint64_t seed) {
  if (n == 0 || d == 0) throw Error(ErrorCode::kInvalidConfig, "synth_data needs n, d >= 1");
  Rng direction_rng(derive_seed(seed, 0));
  std::vector<double> u(d);
  double norm = 0.0;
  while (norm == 0.0) {
    for (auto& x : u) x = direction_rng.normal();
    norm = 0.0;
    for (double x : u) norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : u) x /= norm;

  Rng rng(derive_seed(seed, 1));
  Dataset data;
  data.name = "synth";
  data.dimension = d;
  data.features.resize(n * d);
  data.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = (rng.next_u64() & 1U) ? 1.0 : -1.0;
    data.labels[i] = y;
    for (std::size_t j = 0; j < d; ++j) {
      data.features[i * d + j] = y * 0.5 * separation * u[j] + rng.normal();
    }
  }
  data.checksum = compute_checksum(data);
  return data;
}

Dataset parse_dataset(const std::string& text, const std::string& name) {
  Dataset data;
  data.name = name;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    values.clear();
    std::istringstream tokens(line);
    std::string token;
    while (tokens >> token) {
      double v = 0.0;
      if (!parse_double(token, v) || !std::isfinite(v)) {
        throw Error(ErrorCode::kParseError,
                    name + ":" + std::to_string(line_no) + ": cannot parse number '" + token + "'");
      }
      values.push_back(v);
    }
    if (values.size() < 2) {
      throw Error(ErrorCode::kParseError,
                  name + ":" + std::to_string(line_no) + ": expected a label and at least one feature");
    }
    const std::size_t d = values.size() - 1;
    if (data.labels.empty()) {
      data.dimension = d;
    } else if (d != data.dimension) {
      throw Error(ErrorCode::kParseError, name + ":" + std::to_string(line_no) + ": expected " +
                                              std::to_string(data.dimension) + " features, found " +
                                              std::to_string(d));
    }
    data.labels.push_back(values[0]);
    data.features.insert(data.features.end(), values.begin() + 1, values.end());
  }
  if (data.labels.empty()) throw Error(ErrorCode::kParseError, name + ": no samples found");
  validate(data);
  data.checksum = compute_checksum(data);
  return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open dataset '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIoError, "error reading dataset '" + path.string() + "'");
  return parse_dataset(buffer.str(), path.string());
}

Dataset one_vs_all(const Dataset& data, double positive_class) {
  Dataset out = data;
  for (auto& y : out.labels) y = (y == positive_class) ? 1.0 : -1.0;
  out.checksum = compute_checksum(out);
  return out;
}

void normalize_unit_range(Dataset& data, const Dataset& reference) {
  if (data.dimension != reference.dimension) {
    throw Error(ErrorCode::kDimensionInconsistency, "normalization reference has a different dimension");
  }
  const std::size_t d = data.dimension;
  std::vector<double> lo(d, INFINITY), hi(d, -INFINITY);
  for (std::size_t i = 0; i < reference.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      lo[j] = std::min(lo[j], reference.features[i * d + j]);
      hi[j] = std::max(hi[j], reference.features[i * d + j]);
    }
  }
  for (std::size_t i = 0; i < data.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double& x = data.features[i * d + j];
      const double range = hi[j] - lo[j];
      x = range > 0.0 ? std::clamp((x - lo[j]) / range, 0.0, 1.0) : 0.0;
    }
  }
  data.checksum = compute_checksum(data);
}

void append_bias_feature(Dataset& data) {
  const std::size_t d = data.dimension;
  std::vector<double> widened;
  widened.reserve(data.size() * (d + 1));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = data.row(i);
    widened.insert(widened.end(), r.begin(), r.end());
    widened.push_back(1.0);
  }
  data.features = std::move(widened);
  data.dimension = d + 1;
  data.checksum = compute_checksum(data);
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, std::size_t test_count) {
  if (test_count >= data.size()) {
    throw Error(ErrorCode::kDimensionInconsistency, "test split leaves no training samples");
  }
  const std::size_t n_train = data.size() - test_count;
  const std::size_t d = data.dimension;
  Dataset train, test;
  train.name = data.name + "[train]";
  test.name = data.name + "[test]";
  train.dimension = test.dimension = d;
  train.labels.assign(data.labels.begin(), data.labels.begin() + static_cast<std::ptrdiff_t>(n_train));
  test.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(n_train), data.labels.end());
  train.features.assign(data.features.begin(), data.features.begin() + static_cast<std::ptrdiff_t>(n_train * d));
  test.features.assign(data.features.begin() + static_cast<std::ptrdiff_t>(n_train * d), data.features.end());
  train.checksum = compute_checksum(train);
  test.checksum = compute_checksum(test);
  return {std::move(train), std::move(test)};
}

}  // namespace sketchsgd
