#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sketchsgd/count_sketch.hpp"
#include "sketchsgd/heavy_hitters.hpp"
#include "sketchsgd/sparse_vector.hpp"
#include "sketchsgd/transport.hpp"

namespace sketchsgd {

enum class Algorithm { kSketched, kVanilla, kTrueTopK, kLocalTopK };
enum class OptimizerMode { kTheory, kEmpirical };

std::string_view to_string(Algorithm a) noexcept;
std::string_view to_string(OptimizerMode m) noexcept;
std::optional<Algorithm> parse_algorithm(std::string_view s) noexcept;
std::optional<OptimizerMode> parse_mode(std::string_view s) noexcept;

// Piecewise-linear learning rate over the round index; constant before the
// first knot and after the last.
class LrSchedule {
 public:
  struct Knot {
    double round = 0.0;
    double lr = 0.0;
    friend bool operator==(const Knot&, const Knot&) = default;
  };

  LrSchedule() : LrSchedule(constant(0.1)) {}
  explicit LrSchedule(std::vector<Knot> knots);
  static LrSchedule constant(double lr) { return LrSchedule({Knot{0.0, lr}}); }

  double at(std::size_t t) const noexcept;
  const std::vector<Knot>& knots() const noexcept { return knots_; }

 private:
  std::vector<Knot> knots_;
};

struct OptimizerConfig {
  Algorithm algorithm = Algorithm::kSketched;
  OptimizerMode mode = OptimizerMode::kEmpirical;
  std::size_t k = 1;
  std::size_t p = 1;
  std::size_t rounds = 0;  // T
  std::size_t workers = 1;  // W
  double xi = 3.0;
  double beta = 5.0;
  // Theory step size is 1 / (mu_scale * (t + xi)).
  double mu_scale = 1.0;
  double momentum = 0.0;
  LrSchedule lr = LrSchedule::constant(0.1);
  bool uncompressed_bias = false;
  std::vector<std::size_t> bias_coords;
  // HEAVYMIX padding in theory mode.
  PadStrategy pad = PadStrategy::kUniform;
};

// rho = 4 beta / ((beta - 4)(beta + 1)^2).
double theory_rho(double beta) noexcept;
// Smallest admissible xi (exclusive): 2 + d(1 + beta) / (k(1 + rho)).
double theory_min_xi(std::size_t dimension, std::size_t k, double beta) noexcept;

// Throws Error(kInvalidConfig) when a field is out of range for this
// dimension, including the theory-mode xi bound for the sketched algorithm.
void validate(const OptimizerConfig& config, std::size_t dimension);

// 1 / (t + xi).
double lr_theory(std::size_t t, double xi) noexcept;
// Step size used at round t (theory schedule or the explicit schedule).
double learning_rate(const OptimizerConfig& config, std::size_t t) noexcept;

// Model replica plus error and momentum accumulators of one worker.
struct WorkerState {
  std::vector<double> w;
  std::vector<double> a;  // theory-mode error accumulation
  std::vector<double> u;  // momentum
  std::vector<double> v;  // empirical-mode error accumulation

  WorkerState() = default;
  explicit WorkerState(std::span<const double> initial)
      : w(initial.begin(), initial.end()),
        a(initial.size(), 0.0),
        u(initial.size(), 0.0),
        v(initial.size(), 0.0) {}

  std::size_t dimension() const noexcept { return w.size(); }
};

std::vector<WorkerState> make_workers(std::size_t workers, std::span<const double> initial);

// q_t-weighted running average of iterates, q_t = (xi + t)^2.
class IterateAverage {
 public:
  explicit IterateAverage(double xi) : xi_(xi) {}

  void add(std::size_t t, std::span<const double> w);
  bool empty() const noexcept { return total_weight_ == 0.0; }
  double total_weight() const noexcept { return total_weight_; }
  std::size_t dimension() const noexcept { return weighted_sum_.size(); }

 private:
  friend std::vector<double> finalize_average(const IterateAverage& avg);

  double xi_;
  double total_weight_ = 0.0;
  std::vector<double> weighted_sum_;
};

// Throws Error(kEmptyAverage) if nothing was added.
std::vector<double> finalize_average(const IterateAverage& avg);

struct RoundResult {
  // Update broadcast to workers. Theory mode: already step-scaled (w -= g).
  // Other algorithms: w -= lr * g.
  KSparseVector update;
  std::size_t candidates = 0;  // exact values requested from each worker
  std::size_t union_size = 0;  // update support size (local top-k: union of worker supports)
  double lr = 0.0;
};

// Seeds and channel for one round. The sketch seed is shared by all workers.
struct RoundContext {
  std::size_t t = 1;
  std::uint64_t sketch_seed = 0;
  std::uint64_t rng_seed = 0;
  Transport* transport = nullptr;  // null means a DirectTransport
};

// Sketched-SGD with error accumulation a (theory mode).
RoundResult theory_round(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                         const OptimizerConfig& config, const SketchDims& dims, const RoundContext& ctx);

// Sketched-SGD with momentum correction, momentum factor masking and a top-Pk
// second round (empirical mode).
RoundResult empirical_round(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                            const OptimizerConfig& config, const SketchDims& dims, const RoundContext& ctx);

// w -= lr * mean(grads).
RoundResult vanilla_step(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                         double lr, Transport* transport = nullptr);

// Error feedback around the exact top-k of the mean accumulated vector.
RoundResult true_topk_step(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                           double lr, std::size_t k, double momentum = 0.0, Transport* transport = nullptr);

// Each worker sends the exact top-k of its own accumulator; the update is the
// averaged union.
RoundResult local_topk_step(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                            double lr, std::size_t k, double momentum = 0.0, Transport* transport = nullptr);

}  // namespace sketchsgd
