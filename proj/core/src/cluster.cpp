#include "sketchsgd/cluster.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "sketchsgd/error.hpp"

namespace sketchsgd {

std::vector<std::vector<std::size_t>> partition_batch(std::span<const std::size_t> batch, std::size_t workers) {
  if (workers == 0) throw Error(ErrorCode::kInvalidConfig, "partition_batch needs W >= 1");
  std::vector<std::vector<std::size_t>> shards(workers);
  const std::size_t base = batch.size() / workers;
  const std::size_t extra = batch.size() % workers;
  std::size_t pos = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t len = base + (w < extra ? 1 : 0);
    shards[w].assign(batch.begin() + static_cast<std::ptrdiff_t>(pos),
                     batch.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  }
  return shards;
}

BatchSampler::BatchSampler(std::size_t num_samples, std::size_t batch_size, std::uint64_t seed)
    : num_samples_(num_samples), batch_size_(batch_size), seed_(seed) {
  if (num_samples_ == 0 || batch_size_ == 0) {
    throw Error(ErrorCode::kInvalidConfig, "batch sampler needs samples and a positive batch size");
  }
  refill();
}

void BatchSampler::refill() {
  order_.resize(num_samples_);
  std::iota(order_.begin(), order_.end(), std::size_t{0});
  Rng rng(derive_seed(seed_, epoch_));
  rng.shuffle(std::span<std::size_t>(order_));
  ++epoch_;
  cursor_ = 0;
}

std::vector<std::size_t> BatchSampler::next() {
  std::vector<std::size_t> batch;
  batch.reserve(batch_size_);
  while (batch.size() < batch_size_) {
    if (cursor_ == order_.size()) refill();
    batch.push_back(order_[cursor_++]);
  }
  return batch;
}

double configured_compression(const OptimizerConfig& config, const SketchDims& dims, std::size_t dimension,
                              double mean_union) {
  const double d = static_cast<double>(dimension);
  const double k = static_cast<double>(config.k);
  switch (config.algorithm) {
    case Algorithm::kSketched: {
      const double p = config.mode == OptimizerMode::kTheory ? 1.0 : static_cast<double>(config.p);
      return compression_formula(d, static_cast<double>(dims.size()), p, k);
    }
    case Algorithm::kVanilla:
      return 1.0;
    case Algorithm::kTrueTopK:
      return 2.0 * d / (d + k);
    case Algorithm::kLocalTopK:
      return 2.0 * d / (k + mean_union);
  }
  return 0.0;
}

namespace {

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

[[noreturn]] void diverged(std::size_t t, const std::string& what) {
  throw Error(ErrorCode::kNumericDivergence, "diverged at round " + std::to_string(t) + ": " + what);
}

}  // namespace

Metrics run_training(const Problem& problem, const OptimizerConfig& config, const SketchDims& dims,
                     const RunSeeds& seeds, const RunOptions& options, const TraceOptions& trace) {
  const std::size_t d = problem.dimension();
  const std::size_t workers = config.workers;
  try {
    validate(config, d);
    if (config.algorithm == Algorithm::kSketched) validate(SketchConfig{d, dims.rows, dims.cols, seeds.sketch});
  } catch (const Error& e) {
    throw Error(ErrorCode::kConfigInconsistency, e.what());
  }
  if (!options.initial.empty() && options.initial.size() != d) {
    throw Error(ErrorCode::kConfigInconsistency, "initial point has " + std::to_string(options.initial.size()) +
                                                     " entries for a " + std::to_string(d) + "-dim problem");
  }
  if (options.batch_size < workers) {
    throw Error(ErrorCode::kConfigInconsistency, "batch size " + std::to_string(options.batch_size) +
                                                     " is smaller than W=" + std::to_string(workers));
  }
  if (options.eval_every == 0) throw Error(ErrorCode::kConfigInconsistency, "eval_every must be >= 1");

  const std::vector<double> initial = options.initial.empty() ? std::vector<double>(d, 0.0) : options.initial;
  std::vector<WorkerState> states = make_workers(workers, initial);
  SerializingTransport transport(workers, d);
  BatchSampler sampler(problem.num_samples(), options.batch_size, seeds.data);
  IterateAverage average(config.xi);
  const bool theory_sketched = config.algorithm == Algorithm::kSketched && config.mode == OptimizerMode::kTheory;

  Metrics metrics;
  metrics.records.reserve(config.rounds + 1);
  {
    RoundRecord r0;
    r0.train_loss = problem.loss(states.front().w);
    r0.test_metric = problem.test_metric(states.front().w);
    if (!std::isfinite(r0.train_loss)) diverged(0, "initial loss is not finite");
    r0.stats.dimension = d;
    r0.stats.workers = workers;
    metrics.records.push_back(r0);
  }

  std::vector<std::vector<double>> grads(workers, std::vector<double>(d));
  std::vector<double> batch_mean(d);
  std::vector<double> full(d);
  double sigma_sum = 0.0;
  std::size_t sigma_count = 0;
  double union_sum = 0.0;

  for (std::size_t t = 1; t <= config.rounds; ++t) {
    const std::vector<std::size_t> batch = sampler.next();
    const auto shards = partition_batch(batch, workers);
    std::fill(batch_mean.begin(), batch_mean.end(), 0.0);
    for (std::size_t i = 0; i < workers; ++i) {
      problem.gradient(states[i].w, shards[i], grads[i]);
      double sq = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        sq += grads[i][j] * grads[i][j];
        batch_mean[j] += grads[i][j] * static_cast<double>(shards[i].size());
      }
      metrics.summary.g_squared_max = std::max(metrics.summary.g_squared_max, sq);
    }
    const bool evaluate = (t % options.eval_every == 0) || t == config.rounds;
    if (evaluate) {
      problem.full_gradient(states.front().w, full);
      double dev = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double diff = batch_mean[j] / static_cast<double>(batch.size()) - full[j];
        dev += diff * diff;
      }
      sigma_sum += dev;
      ++sigma_count;
    }
    // The weighted average runs over the iterates the gradients were taken at.
    if (theory_sketched) average.add(t, states.front().w);

    transport.begin_round();
    RoundContext ctx{t, derive_seed(seeds.sketch, t), derive_seed(seeds.rng, t), &transport};
    const double lr = learning_rate(config, t);
    RoundResult result;
    RoundStats stats;
    stats.dimension = d;
    stats.workers = workers;
    switch (config.algorithm) {
      case Algorithm::kSketched:
        result = config.mode == OptimizerMode::kTheory ? theory_round(states, grads, config, dims, ctx)
                                                       : empirical_round(states, grads, config, dims, ctx);
        stats.up_sketch_elems = dims.size();
        stats.up_exact_elems = result.candidates;
        stats.down_update_elems = result.update.size();
        break;
      case Algorithm::kVanilla:
        result = vanilla_step(states, grads, lr, &transport);
        stats.up_exact_elems = d;
        stats.down_update_elems = d;
        break;
      case Algorithm::kTrueTopK:
        result = true_topk_step(states, grads, lr, config.k, config.momentum, &transport);
        stats.up_exact_elems = d;
        stats.down_update_elems = result.update.size();
        break;
      case Algorithm::kLocalTopK:
        result = local_topk_step(states, grads, lr, config.k, config.momentum, &transport);
        stats.up_exact_elems = config.k;
        stats.down_update_elems = result.union_size;
        break;
    }
    apply_traffic(stats, transport.traffic());
    union_sum += static_cast<double>(result.union_size);

    if (!all_finite(states.front().w)) diverged(t, "parameters are not finite");

    RoundRecord rec;
    rec.t = t;
    rec.lr = result.lr;
    rec.update_nnz = result.update.nonzeros();
    rec.union_size = result.union_size;
    rec.stats = stats;
    if (evaluate) {
      rec.train_loss = problem.loss(states.front().w);
      rec.test_metric = problem.test_metric(states.front().w);
      if (!std::isfinite(rec.train_loss)) diverged(t, "training loss is not finite");
    } else {
      rec.train_loss = std::numeric_limits<double>::quiet_NaN();
      rec.test_metric = std::numeric_limits<double>::quiet_NaN();
    }
    metrics.summary.total_bytes_up += stats.bytes_up;
    metrics.summary.total_bytes_down += stats.bytes_down;
    metrics.summary.total_request_bytes += stats.request_bytes;
    metrics.records.push_back(rec);

    if (trace.on_round) trace.on_round(t, states, result);
    if (trace.keep_updates) metrics.updates.push_back(std::move(result.update));
  }

  auto& summary = metrics.summary;
  summary.final_train_loss = metrics.records.back().train_loss;
  summary.final_test_metric = metrics.records.back().test_metric;
  metrics.final_w = states.front().w;
  if (theory_sketched && !average.empty()) {
    metrics.averaged_w = finalize_average(average);
    summary.has_average = true;
    summary.average_train_loss = problem.loss(metrics.averaged_w);
    summary.average_test_metric = problem.test_metric(metrics.averaged_w);
  }
  const double mean_union = config.rounds > 0 ? union_sum / static_cast<double>(config.rounds) : 0.0;
  summary.compression_factor = configured_compression(config, dims, d, mean_union);
  const double worker_rounds = static_cast<double>(workers * config.rounds);
  if (worker_rounds > 0.0) {
    const double per_worker =
        static_cast<double>(summary.total_bytes_up + summary.total_bytes_down - summary.total_request_bytes) /
        worker_rounds;
    summary.byte_compression_factor =
        per_worker > 0.0 ? 2.0 * static_cast<double>(values_frame_bytes(d)) / per_worker : 0.0;
  }
  summary.sigma_squared = sigma_count > 0 ? sigma_sum / static_cast<double>(sigma_count) : 0.0;
  return metrics;
}

}  // namespace sketchsgd
