#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "sketchsgd/accounting.hpp"
#include "sketchsgd/count_sketch.hpp"
#include "sketchsgd/optim.hpp"
#include "sketchsgd/problems.hpp"
#include "sketchsgd/random.hpp"

namespace sketchsgd {

// Contiguous shards whose sizes differ by at most one, larger shards first.
// W must be >= 1; shards may be empty when the batch is smaller than W.
std::vector<std::vector<std::size_t>> partition_batch(std::span<const std::size_t> batch, std::size_t workers);

// Epoch-wise seeded permutations of [0, n), consumed in batches of B.
class BatchSampler {
 public:
  BatchSampler(std::size_t num_samples, std::size_t batch_size, std::uint64_t seed);

  std::vector<std::size_t> next();

 private:
  void refill();

  std::size_t num_samples_;
  std::size_t batch_size_;
  std::uint64_t seed_;
  std::size_t epoch_ = 0;
  std::size_t cursor_ = 0;
  std::vector<std::size_t> order_;
};

struct RunSeeds {
  std::uint64_t data = 0;    // batch order
  std::uint64_t sketch = 0;  // hash family, refreshed per round
  std::uint64_t rng = 0;     // HEAVYMIX sampling
};

struct RunOptions {
  std::size_t batch_size = 32;
  // Loss and test metric are evaluated every this many rounds (and at t = 0
  // and t = T); other records carry NaN.
  std::size_t eval_every = 1;
  // Initial parameters; zeros when empty.
  std::vector<double> initial;
};

struct RoundRecord {
  std::size_t t = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double test_metric = 0.0;
  std::size_t update_nnz = 0;
  std::size_t union_size = 0;
  RoundStats stats;
};

struct MetricsSummary {
  double final_train_loss = 0.0;
  double final_test_metric = 0.0;
  bool has_average = false;  // theory mode
  double average_train_loss = 0.0;
  double average_test_metric = 0.0;
  std::size_t total_bytes_up = 0;
  std::size_t total_bytes_down = 0;
  std::size_t total_request_bytes = 0;
  // Element formula applied to the configuration.
  double compression_factor = 0.0;
  // Two dense frames per worker-round over the measured per-worker bytes.
  double byte_compression_factor = 0.0;
  double g_squared_max = 0.0;
  double sigma_squared = 0.0;
};

struct Metrics {
  std::vector<RoundRecord> records;  // t = 0 .. T
  MetricsSummary summary;
  std::vector<double> final_w;
  std::vector<double> averaged_w;  // theory mode only
  std::vector<KSparseVector> updates;  // g~_t per round when requested
};

struct TraceOptions {
  bool keep_updates = false;
  // Invoked after each round with the post-round worker states.
  std::function<void(std::size_t t, const std::vector<WorkerState>&, const RoundResult&)> on_round;
};

// Configured compression 2d / (|S| + Pk + k) for the sketched algorithm and
// the analogous element ratio for baselines (local top-k uses the measured
// mean union).
double configured_compression(const OptimizerConfig& config, const SketchDims& dims, std::size_t dimension,
                              double mean_union = 0.0);

// Executes T synchronous rounds on the star topology with serialized
// messages. Deterministic given the seeds. Throws Error(kConfigInconsistency)
// when dims disagree with the problem and Error(kNumericDivergence) on a
// non-finite loss or parameter.
Metrics run_training(const Problem& problem, const OptimizerConfig& config, const SketchDims& dims,
                     const RunSeeds& seeds, const RunOptions& options = {}, const TraceOptions& trace = {});

}  // namespace sketchsgd
