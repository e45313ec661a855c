#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sketchsgd/dataset.hpp"

namespace sketchsgd {

enum class ProblemKind { kQuadratic, kLogistic, kHingeSvm };

std::string_view to_string(ProblemKind kind) noexcept;
std::optional<ProblemKind> parse_problem_kind(std::string_view s) noexcept;

// f(w) = 1/2 w^T diag(curvature) w - b^T w, gradients perturbed by N(0, sigma^2 I).
struct QuadraticSpec {
  std::vector<double> curvature;
  std::vector<double> offset;  // b
  double sigma = 0.0;

  std::size_t dimension() const noexcept { return curvature.size(); }
};

// Curvatures spaced linearly in [curvature_min, curvature_max], b ~ N(0, I).
QuadraticSpec make_quadratic(std::size_t d, double curvature_min, double curvature_max, double sigma,
                             std::uint64_t seed);

// A w - b plus fresh N(0, sigma^2) noise drawn from batch_seed.
std::vector<double> quadratic_gradient(std::span<const double> w, std::uint64_t batch_seed,
                                       const QuadraticSpec& spec);

// Mean over `batch` of -y x sigmoid(-y <w, x>), plus lambda w.
std::vector<double> logistic_gradient(std::span<const double> w, const Dataset& data,
                                      std::span<const std::size_t> batch, double lambda);
// Mean logistic loss over `batch` plus lambda/2 ||w||^2.
double logistic_loss(std::span<const double> w, const Dataset& data, std::span<const std::size_t> batch,
                     double lambda);

// Mean over `batch` of -y x where y <w, x> < 1, zero otherwise (the zero
// branch is taken at the kink).
std::vector<double> hinge_subgradient(std::span<const double> w, const Dataset& data,
                                      std::span<const std::size_t> batch);
double hinge_loss(std::span<const double> w, const Dataset& data, std::span<const std::size_t> batch);

// Fraction of samples with sign(<w, x>) != y (a zero margin predicts +1).
double classification_error(std::span<const double> w, const Dataset& data);

// Stochastic objective: full loss, mini-batch gradients over sample ids,
// and a held-out metric.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual ProblemKind kind() const noexcept = 0;
  virtual std::size_t dimension() const noexcept = 0;
  virtual std::size_t num_samples() const noexcept = 0;

  virtual double loss(std::span<const double> w) const = 0;
  // Mean gradient over the given sample ids, written to out (size d).
  virtual void gradient(std::span<const double> w, std::span<const std::size_t> batch,
                        std::span<double> out) const = 0;
  virtual void full_gradient(std::span<const double> w, std::span<double> out) const;

  // Test error for classifiers, ||w - w*||^2 for the quadratic.
  virtual double test_metric(std::span<const double> w) const = 0;
  virtual std::string_view test_metric_name() const noexcept = 0;

  // Strong convexity and smoothness constants when known analytically.
  virtual std::optional<double> strong_convexity() const noexcept { return std::nullopt; }
  virtual std::optional<double> smoothness() const noexcept { return std::nullopt; }

  std::vector<double> gradient(std::span<const double> w, std::span<const std::size_t> batch) const;
};

// Quadratic whose samples are a finite pool of noise vectors centered to mean
// zero, so the mean per-sample gradient is exactly A w - b.
class QuadraticProblem final : public Problem {
 public:
  QuadraticProblem(QuadraticSpec spec, std::size_t pool_size, std::uint64_t seed);

  ProblemKind kind() const noexcept override { return ProblemKind::kQuadratic; }
  std::size_t dimension() const noexcept override { return spec_.dimension(); }
  std::size_t num_samples() const noexcept override { return pool_size_; }
  double loss(std::span<const double> w) const override;
  using Problem::gradient;
  void gradient(std::span<const double> w, std::span<const std::size_t> batch,
                std::span<double> out) const override;
  double test_metric(std::span<const double> w) const override;
  std::string_view test_metric_name() const noexcept override { return "dist_sq"; }
  std::optional<double> strong_convexity() const noexcept override;
  std::optional<double> smoothness() const noexcept override;

  const QuadraticSpec& spec() const noexcept { return spec_; }
  std::vector<double> minimizer() const;

 private:
  QuadraticSpec spec_;
  std::size_t pool_size_;
  std::vector<double> noise_;  // pool_size x d
};

class LogisticProblem final : public Problem {
 public:
  LogisticProblem(Dataset train, Dataset test, double lambda);

  ProblemKind kind() const noexcept override { return ProblemKind::kLogistic; }
  std::size_t dimension() const noexcept override { return train_.dimension; }
  std::size_t num_samples() const noexcept override { return train_.size(); }
  double loss(std::span<const double> w) const override;
  using Problem::gradient;
  void gradient(std::span<const double> w, std::span<const std::size_t> batch,
                std::span<double> out) const override;
  double test_metric(std::span<const double> w) const override;
  std::string_view test_metric_name() const noexcept override { return "test_error"; }
  std::optional<double> strong_convexity() const noexcept override { return lambda_; }

  const Dataset& train() const noexcept { return train_; }
  const Dataset& test() const noexcept { return test_; }

 private:
  Dataset train_;
  Dataset test_;
  double lambda_;
  std::vector<std::size_t> all_;
};

// Hinge loss plus optional lambda/2 ||w||^2.
class HingeSvmProblem final : public Problem {
 public:
  HingeSvmProblem(Dataset train, Dataset test, double lambda);

  ProblemKind kind() const noexcept override { return ProblemKind::kHingeSvm; }
  std::size_t dimension() const noexcept override { return train_.dimension; }
  std::size_t num_samples() const noexcept override { return train_.size(); }
  double loss(std::span<const double> w) const override;
  using Problem::gradient;
  void gradient(std::span<const double> w, std::span<const std::size_t> batch,
                std::span<double> out) const override;
  double test_metric(std::span<const double> w) const override;
  std::string_view test_metric_name() const noexcept override { return "test_error"; }

  const Dataset& train() const noexcept { return train_; }
  const Dataset& test() const noexcept { return test_; }

 private:
  Dataset train_;
  Dataset test_;
  double lambda_;
  std::vector<std::size_t> all_;
};

}  // namespace sketchsgd
