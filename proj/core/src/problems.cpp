#include "sketchsgd/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sketchsgd/error.hpp"
#include "sketchsgd/random.hpp"

namespace sketchsgd {

std::string_view to_string(ProblemKind kind) noexcept {
  switch (kind) {
    case ProblemKind::kQuadratic: return "quadratic";
    case ProblemKind::kLogistic: return "logistic";
    case ProblemKind::kHingeSvm: return "hinge";
  }
  return "unknown";
}

std::optional<ProblemKind> parse_problem_kind(std::string_view s) noexcept {
  if (s == "quadratic") return ProblemKind::kQuadratic;
  if (s == "logistic") return ProblemKind::kLogistic;
  if (s == "hinge" || s == "hinge-svm" || s == "svm") return ProblemKind::kHingeSvm;
  return std::nullopt;
}

namespace {

void check_dim(std::span<const double> w, std::size_t d) {
  if (w.size() != d) {
    throw Error(ErrorCode::kDimensionMismatch,
                "parameter vector has " + std::to_string(w.size()) + " entries, expected " + std::to_string(d));
  }
}

void check_batch(const Dataset& data, std::span<const std::size_t> batch) {
  if (batch.empty()) throw Error(ErrorCode::kDimensionMismatch, "empty batch");
  for (std::size_t i : batch) {
    if (i >= data.size()) throw Error(ErrorCode::kIndexOutOfRange, "sample id " + std::to_string(i) + " out of range");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void logistic_gradient_into(std::span<const double> w, const Dataset& data, std::span<const std::size_t> batch,
                            double lambda, std::span<double> out) {
  check_dim(w, data.dimension);
  check_batch(data, batch);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i : batch) {
    const auto x = data.row(i);
    const double y = data.labels[i];
    const double coef = -y * sigmoid(-y * dot(w, x));
    for (std::size_t j = 0; j < x.size(); ++j) out[j] += coef * x[j];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = out[j] * inv + lambda * w[j];
}

void hinge_subgradient_into(std::span<const double> w, const Dataset& data, std::span<const std::size_t> batch,
                            std::span<double> out) {
  check_dim(w, data.dimension);
  check_batch(data, batch);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i : batch) {
    const auto x = data.row(i);
    const double y = data.labels[i];
    if (y * dot(w, x) < 1.0) {
      for (std::size_t j = 0; j < x.size(); ++j) out[j] -= y * x[j];
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& v : out) v *= inv;
}

std::vector<std::size_t> iota_ids(std::size_t n) {
  std::vector<std::size_t> ids(n);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  return ids;
}

double half_sq_norm(std::span<const double> w) { return 0.5 * dot(w, w); }

}  // namespace

QuadraticSpec make_quadratic(std::size_t d, double curvature_min, double curvature_max, double sigma,
                             std::uint64_t seed) {
  if (d == 0) throw Error(ErrorCode::kInvalidConfig, "quadratic dimension must be positive");
  if (!(curvature_min > 0.0) || curvature_max < curvature_min) {
    throw Error(ErrorCode::kInvalidConfig, "quadratic curvature must satisfy 0 < min <= max");
  }
  if (!(sigma >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "quadratic sigma must be nonnegative");
  QuadraticSpec spec;
  spec.sigma = sigma;
  spec.curvature.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    const double frac = d == 1 ? 0.0 : static_cast<double>(j) / static_cast<double>(d - 1);
    spec.curvature[j] = curvature_min + frac * (curvature_max - curvature_min);
  }
  Rng rng(derive_seed(seed, 0x9a));
  spec.offset.resize(d);
  for (auto& b : spec.offset) b = rng.normal();
  return spec;
}

std::vector<double> quadratic_gradient(std::span<const double> w, std::uint64_t batch_seed,
                                       const QuadraticSpec& spec) {
  check_dim(w, spec.dimension());
  Rng rng(batch_seed);
  std::vector<double> g(w.size());
  for (std::size_t j = 0; j < w.size(); ++j) {
    g[j] = spec.curvature[j] * w[j] - spec.offset[j];
    if (spec.sigma > 0.0) g[j] += spec.sigma * rng.normal();
  }
  return g;
}

std::vector<double> logistic_gradient(std::span<const double> w, const Dataset& data,
                                      std::span<const std::size_t> batch, double lambda) {
  std::vector<double> out(data.dimension);
  logistic_gradient_into(w, data, batch, lambda, out);
  return out;
}

double logistic_loss(std::span<const double> w, const Dataset& data, std::span<const std::size_t> batch,
                     double lambda) {
  check_dim(w, data.dimension);
  check_batch(data, batch);
  double total = 0.0;
  for (std::size_t i : batch) total += softplus(-data.labels[i] * dot(w, data.row(i)));
  return total / static_cast<double>(batch.size()) + lambda * half_sq_norm(w);
}

std::vector<double> hinge_subgradient(std::span<const double> w, const Dataset& data,
                                      std::span<const std::size_t> batch) {
  std::vector<double> out(data.dimension);
  hinge_subgradient_into(w, data, batch, out);
  return out;
}

double hinge_loss(std::span<const double> w, const Dataset& data, std::span<const std::size_t> batch) {
  check_dim(w, data.dimension);
  check_batch(data, batch);
  double total = 0.0;
  for (std::size_t i : batch) total += std::max(0.0, 1.0 - data.labels[i] * dot(w, data.row(i)));
  return total / static_cast<double>(batch.size());
}

double classification_error(std::span<const double> w, const Dataset& data) {
  check_dim(w, data.dimension);
  if (data.size() == 0) return 0.0;
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double predicted = dot(w, data.row(i)) >= 0.0 ? 1.0 : -1.0;
    if (predicted != data.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.size());
}

void Problem::full_gradient(std::span<const double> w, std::span<double> out) const {
  const std::vector<std::size_t> all = iota_ids(num_samples());
  gradient(w, all, out);
}

std::vector<double> Problem::gradient(std::span<const double> w, std::span<const std::size_t> batch) const {
  std::vector<double> out(dimension());
  gradient(w, batch, out);
  return out;
}

QuadraticProblem::QuadraticProblem(QuadraticSpec spec, std::size_t pool_size, std::uint64_t seed)
    : spec_(std::move(spec)), pool_size_(pool_size) {
  const std::size_t d = spec_.dimension();
  if (d == 0 || spec_.offset.size() != d) {
    throw Error(ErrorCode::kDimensionInconsistency, "quadratic curvature and offset lengths differ");
  }
  if (pool_size_ == 0) throw Error(ErrorCode::kInvalidConfig, "quadratic sample pool must be nonempty");
  noise_.assign(pool_size_ * d, 0.0);
  if (spec_.sigma > 0.0) {
    Rng rng(derive_seed(seed, 0x5e));
    for (auto& z : noise_) z = spec_.sigma * rng.normal();
    for (std::size_t j = 0; j < d; ++j) {
      double mean = 0.0;
      for (std::size_t s = 0; s < pool_size_; ++s) mean += noise_[s * d + j];
      mean /= static_cast<double>(pool_size_);
      for (std::size_t s = 0; s < pool_size_; ++s) noise_[s * d + j] -= mean;
    }
  }
}

double QuadraticProblem::loss(std::span<const double> w) const {
  check_dim(w, dimension());
  double f = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) f += 0.5 * spec_.curvature[j] * w[j] * w[j] - spec_.offset[j] * w[j];
  return f;
}

void QuadraticProblem::gradient(std::span<const double> w, std::span<const std::size_t> batch,
                                std::span<double> out) const {
  check_dim(w, dimension());
  if (batch.empty()) throw Error(ErrorCode::kDimensionMismatch, "empty batch");
  const std::size_t d = dimension();
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t s : batch) {
    if (s >= pool_size_) throw Error(ErrorCode::kIndexOutOfRange, "sample id out of range");
    for (std::size_t j = 0; j < d; ++j) out[j] += noise_[s * d + j];
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (std::size_t j = 0; j < d; ++j) out[j] = spec_.curvature[j] * w[j] - spec_.offset[j] + out[j] * inv;
}

std::vector<double> QuadraticProblem::minimizer() const {
  std::vector<double> w(dimension());
  for (std::size_t j = 0; j < w.size(); ++j) w[j] = spec_.offset[j] / spec_.curvature[j];
  return w;
}

double QuadraticProblem::test_metric(std::span<const double> w) const {
  check_dim(w, dimension());
  double s = 0.0;
  for (std::size_t j = 0; j < w.size(); ++j) {
    const double diff = w[j] - spec_.offset[j] / spec_.curvature[j];
    s += diff * diff;
  }
  return s;
}

std::optional<double> QuadraticProblem::strong_convexity() const noexcept {
  return *std::min_element(spec_.curvature.begin(), spec_.curvature.end());
}

std::optional<double> QuadraticProblem::smoothness() const noexcept {
  return *std::max_element(spec_.curvature.begin(), spec_.curvature.end());
}

LogisticProblem::LogisticProblem(Dataset train, Dataset test, double lambda)
    : train_(std::move(train)), test_(std::move(test)), lambda_(lambda) {
  validate(train_);
  if (test_.size() > 0 && test_.dimension != train_.dimension) {
    throw Error(ErrorCode::kDimensionInconsistency, "train and test feature counts differ");
  }
  if (!(lambda_ >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "lambda must be nonnegative");
  all_ = iota_ids(train_.size());
}

double LogisticProblem::loss(std::span<const double> w) const { return logistic_loss(w, train_, all_, lambda_); }

void LogisticProblem::gradient(std::span<const double> w, std::span<const std::size_t> batch,
                               std::span<double> out) const {
  logistic_gradient_into(w, train_, batch, lambda_, out);
}

double LogisticProblem::test_metric(std::span<const double> w) const {
  return classification_error(w, test_.size() > 0 ? test_ : train_);
}

HingeSvmProblem::HingeSvmProblem(Dataset train, Dataset test, double lambda)
    : train_(std::move(train)), test_(std::move(test)), lambda_(lambda) {
  validate(train_);
  if (test_.size() > 0 && test_.dimension != train_.dimension) {
    throw Error(ErrorCode::kDimensionInconsistency, "train and test feature counts differ");
  }
  if (!(lambda_ >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "lambda must be nonnegative");
  all_ = iota_ids(train_.size());
}

double HingeSvmProblem::loss(std::span<const double> w) const {
  return hinge_loss(w, train_, all_) + lambda_ * half_sq_norm(w);
}

void HingeSvmProblem::gradient(std::span<const double> w, std::span<const std::size_t> batch,
                               std::span<double> out) const {
  hinge_subgradient_into(w, train_, batch, out);
  if (lambda_ > 0.0) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += lambda_ * w[j];
  }
}

double HingeSvmProblem::test_metric(std::span<const double> w) const {
  return classification_error(w, test_.size() > 0 ? test_ : train_);
}

}  // namespace sketchsgd
