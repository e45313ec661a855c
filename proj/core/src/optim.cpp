#include "sketchsgd/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sketchsgd/error.hpp"
#include "sketchsgd/heavy_hitters.hpp"

namespace sketchsgd {

std::string_view to_string(Algorithm a) noexcept {
  switch (a) {
    case Algorithm::kSketched: return "sketched";
    case Algorithm::kVanilla: return "vanilla";
    case Algorithm::kTrueTopK: return "true-topk";
    case Algorithm::kLocalTopK: return "local-topk";
  }
  return "unknown";
}

std::string_view to_string(OptimizerMode m) noexcept {
  return m == OptimizerMode::kTheory ? "theory" : "empirical";
}

std::optional<Algorithm> parse_algorithm(std::string_view s) noexcept {
  for (Algorithm a : {Algorithm::kSketched, Algorithm::kVanilla, Algorithm::kTrueTopK, Algorithm::kLocalTopK}) {
    if (s == to_string(a)) return a;
  }
  return std::nullopt;
}

std::optional<OptimizerMode> parse_mode(std::string_view s) noexcept {
  if (s == "theory") return OptimizerMode::kTheory;
  if (s == "empirical") return OptimizerMode::kEmpirical;
  return std::nullopt;
}

LrSchedule::LrSchedule(std::vector<Knot> knots) : knots_(std::move(knots)) {
  if (knots_.empty()) throw Error(ErrorCode::kInvalidConfig, "learning-rate schedule needs at least one knot");
  for (std::size_t i = 0; i < knots_.size(); ++i) {
    if (!std::isfinite(knots_[i].lr) || knots_[i].lr < 0.0 || !std::isfinite(knots_[i].round)) {
      throw Error(ErrorCode::kInvalidConfig, "learning-rate knots must be finite and nonnegative");
    }
    if (i > 0 && knots_[i].round <= knots_[i - 1].round) {
      throw Error(ErrorCode::kInvalidConfig, "learning-rate knots must have increasing rounds");
    }
  }
}

double LrSchedule::at(std::size_t t) const noexcept {
  const double x = static_cast<double>(t);
  if (x <= knots_.front().round) return knots_.front().lr;
  if (x >= knots_.back().round) return knots_.back().lr;
  auto hi = std::upper_bound(knots_.begin(), knots_.end(), x,
                             [](double value, const Knot& k) { return value < k.round; });
  auto lo = hi - 1;
  const double frac = (x - lo->round) / (hi->round - lo->round);
  return lo->lr + frac * (hi->lr - lo->lr);
}

double theory_rho(double beta) noexcept {
  return 4.0 * beta / ((beta - 4.0) * (beta + 1.0) * (beta + 1.0));
}

double theory_min_xi(std::size_t dimension, std::size_t k, double beta) noexcept {
  return 2.0 + static_cast<double>(dimension) * (1.0 + beta) /
                   (static_cast<double>(k) * (1.0 + theory_rho(beta)));
}

void validate(const OptimizerConfig& config, std::size_t dimension) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::kInvalidConfig, what); };
  if (dimension == 0) fail("model dimension must be positive");
  if (config.workers == 0) fail("optimizer.workers must be >= 1");
  const bool needs_k = config.algorithm != Algorithm::kVanilla;
  if (needs_k && (config.k == 0 || config.k > dimension)) {
    fail("optimizer.k must satisfy 1 <= k <= d (k=" + std::to_string(config.k) +
         ", d=" + std::to_string(dimension) + ")");
  }
  if (config.algorithm == Algorithm::kSketched && config.mode == OptimizerMode::kEmpirical && config.p == 0) {
    fail("optimizer.P must be >= 1");
  }
  if (!(config.momentum >= 0.0 && config.momentum < 1.0)) fail("optimizer.momentum must lie in [0, 1)");
  if (!(config.mu_scale > 0.0) || !std::isfinite(config.mu_scale)) fail("optimizer.mu must be positive");
  for (std::size_t c : config.bias_coords) {
    if (c >= dimension) fail("optimizer.bias_coords entry " + std::to_string(c) + " out of range");
  }
  if (config.mode == OptimizerMode::kTheory) {
    if (!(config.xi > 2.0)) fail("optimizer.xi must exceed 2 in theory mode");
    if (config.algorithm == Algorithm::kSketched) {
      if (!(config.beta > 4.0)) fail("optimizer.beta must exceed 4 in theory mode");
      const double min_xi = theory_min_xi(dimension, config.k, config.beta);
      if (!(config.xi > min_xi)) {
        fail("theory mode needs xi > 2 + d(1+beta)/(k(1+rho)) = " + std::to_string(min_xi) +
             " (got xi=" + std::to_string(config.xi) + ")");
      }
    }
  }
}

double lr_theory(std::size_t t, double xi) noexcept { return 1.0 / (static_cast<double>(t) + xi); }

double learning_rate(const OptimizerConfig& config, std::size_t t) noexcept {
  if (config.mode == OptimizerMode::kTheory) return lr_theory(t, config.xi) / config.mu_scale;
  return config.lr.at(t);
}

std::vector<WorkerState> make_workers(std::size_t workers, std::span<const double> initial) {
  return std::vector<WorkerState>(workers, WorkerState(initial));
}

void IterateAverage::add(std::size_t t, std::span<const double> w) {
  if (weighted_sum_.empty()) {
    weighted_sum_.assign(w.size(), 0.0);
  } else if (weighted_sum_.size() != w.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "iterate dimension changed");
  }
  const double q = (xi_ + static_cast<double>(t)) * (xi_ + static_cast<double>(t));
  for (std::size_t i = 0; i < w.size(); ++i) weighted_sum_[i] += q * w[i];
  total_weight_ += q;
}

std::vector<double> finalize_average(const IterateAverage& avg) {
  if (avg.empty()) throw Error(ErrorCode::kEmptyAverage, "no iterates accumulated");
  std::vector<double> out(avg.weighted_sum_);
  for (auto& v : out) v /= avg.total_weight_;
  return out;
}

namespace {

void check_inputs(const std::vector<WorkerState>& states, std::span<const std::vector<double>> grads) {
  if (states.empty()) throw Error(ErrorCode::kDimensionMismatch, "no workers");
  if (grads.size() != states.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "got " + std::to_string(grads.size()) + " gradients for " +
                                                   std::to_string(states.size()) + " workers");
  }
  const std::size_t d = states.front().dimension();
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (states[i].dimension() != d || grads[i].size() != d) {
      throw Error(ErrorCode::kDimensionMismatch, "worker " + std::to_string(i) + " dimension mismatch");
    }
  }
}

// Owns a DirectTransport when the caller passed none.
class TransportRef {
 public:
  TransportRef(Transport* t, std::size_t workers) : direct_(workers), ref_(t ? *t : direct_) {}
  Transport& get() noexcept { return ref_; }

 private:
  DirectTransport direct_;
  Transport& ref_;
};

// Server broadcasts the update; every worker applies w -= step * update to
// its replica and returns the update it saw.
std::vector<KSparseVector> broadcast_update(std::vector<WorkerState>& states, const KSparseVector& update,
                                            double step, Transport& transport) {
  std::vector<KSparseVector> seen;
  seen.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    UpdateDown received = send_to_worker(transport, i, UpdateDown{update});
    for (const auto& e : received.update.entries()) states[i].w[e.index] -= step * e.value;
    seen.push_back(std::move(received.update));
  }
  return seen;
}

CountSketch gather_merged_sketch(std::span<const std::vector<double>> vectors, const SketchConfig& config,
                                 Transport& transport, std::span<const std::size_t> excluded = {}) {
  std::vector<CountSketch> received;
  received.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    CountSketch s(config);
    if (excluded.empty()) {
      s.accumulate(vectors[i]);
    } else {
      std::vector<double> masked = vectors[i];
      for (std::size_t c : excluded) masked[c] = 0.0;
      s.accumulate(masked);
    }
    received.push_back(send_to_server(transport, i, SketchUp{std::move(s)}).sketch);
  }
  return merge_all(received, 1.0 / static_cast<double>(vectors.size()));
}

std::vector<std::vector<double>> collect(std::vector<WorkerState>& states, std::vector<double> WorkerState::*field) {
  std::vector<std::vector<double>> out;
  out.reserve(states.size());
  for (auto& s : states) out.push_back(s.*field);
  return out;
}

void momentum_accumulate(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                         double momentum) {
  for (std::size_t i = 0; i < states.size(); ++i) {
    auto& s = states[i];
    for (std::size_t j = 0; j < s.dimension(); ++j) {
      s.u[j] = momentum * s.u[j] + grads[i][j];
      s.v[j] += s.u[j];
    }
  }
}

void mask(WorkerState& s, std::span<const SparseEntry> entries) {
  for (const auto& e : entries) {
    s.u[e.index] = 0.0;
    s.v[e.index] = 0.0;
  }
}

KSparseVector gather(std::size_t d, std::span<const std::size_t> indices, std::span<const double> values) {
  std::vector<SparseEntry> entries(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) entries[i] = {indices[i], values[i]};
  return KSparseVector(d, std::move(entries));
}

}  // namespace

RoundResult theory_round(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                         const OptimizerConfig& config, const SketchDims& dims, const RoundContext& ctx) {
  check_inputs(states, grads);
  const std::size_t d = states.front().dimension();
  TransportRef transport(ctx.transport, states.size());
  const double lr = learning_rate(config, ctx.t);

  // a^i becomes ag^i = lr * g^i + a^i.
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j = 0; j < d; ++j) states[i].a[j] += lr * grads[i][j];
  }
  const std::vector<std::vector<double>> corrected = collect(states, &WorkerState::a);
  const SketchConfig sketch_config{d, dims.rows, dims.cols, ctx.sketch_seed};
  const CountSketch merged = gather_merged_sketch(corrected, sketch_config, transport.get());

  std::size_t requested = 0;
  const ExactLookup lookup = [&](std::span<const std::size_t> indices) {
    requested = indices.size();
    return exact_lookup_round(corrected, indices, transport.get());
  };
  KSparseVector update = heavymix(merged, config.k, lookup, ctx.rng_seed, config.pad);

  const std::vector<KSparseVector> seen = broadcast_update(states, update, 1.0, transport.get());
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (const auto& e : seen[i].entries()) states[i].a[e.index] -= e.value;
  }
  RoundResult result;
  result.candidates = requested;
  result.union_size = update.size();
  result.lr = lr;
  result.update = std::move(update);
  return result;
}

RoundResult empirical_round(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                            const OptimizerConfig& config, const SketchDims& dims, const RoundContext& ctx) {
  check_inputs(states, grads);
  const std::size_t d = states.front().dimension();
  TransportRef transport(ctx.transport, states.size());
  const double lr = learning_rate(config, ctx.t);

  momentum_accumulate(states, grads, config.momentum);
  const std::vector<std::vector<double>> accumulated = collect(states, &WorkerState::v);

  std::vector<std::size_t> bias;
  if (config.uncompressed_bias) {
    bias = config.bias_coords;
    std::sort(bias.begin(), bias.end());
    bias.erase(std::unique(bias.begin(), bias.end()), bias.end());
  }
  const auto is_bias = [&](std::size_t i) { return std::binary_search(bias.begin(), bias.end(), i); };

  const SketchConfig sketch_config{d, dims.rows, dims.cols, ctx.sketch_seed};
  const CountSketch merged = gather_merged_sketch(accumulated, sketch_config, transport.get(), bias);

  std::vector<std::size_t> candidates = top_pk_candidates(merged, config.p, config.k);
  if (!bias.empty()) {
    std::erase_if(candidates, is_bias);
  }
  std::vector<std::size_t> request = candidates;
  request.insert(request.end(), bias.begin(), bias.end());
  std::sort(request.begin(), request.end());

  const std::vector<double> exact = exact_lookup_round(accumulated, request, transport.get());

  // Keep the k largest exact values among compressed candidates; bias
  // coordinates always pass through.
  std::vector<double> candidate_values;
  std::vector<std::size_t> candidate_indices;
  std::vector<SparseEntry> entries;
  for (std::size_t i = 0; i < request.size(); ++i) {
    if (is_bias(request[i])) {
      entries.push_back({request[i], exact[i]});
    } else {
      candidate_indices.push_back(request[i]);
      candidate_values.push_back(exact[i]);
    }
  }
  for (std::size_t pos : top_k_indices(candidate_values, config.k)) {
    entries.push_back({candidate_indices[pos], candidate_values[pos]});
  }
  KSparseVector update(d, std::move(entries));

  const std::vector<KSparseVector> seen = broadcast_update(states, update, lr, transport.get());
  for (std::size_t i = 0; i < states.size(); ++i) mask(states[i], seen[i].entries());

  RoundResult result;
  result.candidates = request.size();
  result.union_size = update.size();
  result.lr = lr;
  result.update = std::move(update);
  return result;
}

RoundResult vanilla_step(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                         double lr, Transport* transport_ptr) {
  check_inputs(states, grads);
  const std::size_t d = states.front().dimension();
  TransportRef transport(transport_ptr, states.size());
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const DenseVector received = send_to_server(transport.get(), i, DenseVector{grads[i]});
    for (std::size_t j = 0; j < d; ++j) mean[j] += received.values[j];
  }
  for (auto& v : mean) v /= static_cast<double>(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    const DenseVector received = send_to_worker(transport.get(), i, DenseVector{mean});
    for (std::size_t j = 0; j < d; ++j) states[i].w[j] -= lr * received.values[j];
  }
  RoundResult result;
  std::vector<SparseEntry> entries(d);
  for (std::size_t j = 0; j < d; ++j) entries[j] = {j, mean[j]};
  result.update = KSparseVector(d, std::move(entries));
  result.union_size = d;
  result.lr = lr;
  return result;
}

RoundResult true_topk_step(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                           double lr, std::size_t k, double momentum, Transport* transport_ptr) {
  check_inputs(states, grads);
  const std::size_t d = states.front().dimension();
  if (k == 0 || k > d) throw Error(ErrorCode::kKOutOfRange, "true_topk_step needs 1 <= k <= d");
  TransportRef transport(transport_ptr, states.size());

  momentum_accumulate(states, grads, momentum);
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < states.size(); ++i) {
    const DenseVector received = send_to_server(transport.get(), i, DenseVector{states[i].v});
    for (std::size_t j = 0; j < d; ++j) mean[j] += received.values[j];
  }
  for (auto& v : mean) v /= static_cast<double>(states.size());

  const std::vector<std::size_t> top = top_k_indices(mean, k);
  std::vector<double> values;
  values.reserve(top.size());
  for (std::size_t i : top) values.push_back(mean[i]);
  KSparseVector update = gather(d, top, values);

  const std::vector<KSparseVector> seen = broadcast_update(states, update, lr, transport.get());
  for (std::size_t i = 0; i < states.size(); ++i) mask(states[i], seen[i].entries());

  RoundResult result;
  result.candidates = d;
  result.union_size = update.size();
  result.lr = lr;
  result.update = std::move(update);
  return result;
}

RoundResult local_topk_step(std::vector<WorkerState>& states, std::span<const std::vector<double>> grads,
                            double lr, std::size_t k, double momentum, Transport* transport_ptr) {
  check_inputs(states, grads);
  const std::size_t d = states.front().dimension();
  if (k == 0 || k > d) throw Error(ErrorCode::kKOutOfRange, "local_topk_step needs 1 <= k <= d");
  TransportRef transport(transport_ptr, states.size());

  momentum_accumulate(states, grads, momentum);
  std::vector<double> sum(d, 0.0);
  std::vector<bool> in_union(d, false);
  std::vector<std::vector<std::size_t>> sent(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    sent[i] = top_k_indices(states[i].v, k);
    std::vector<double> values;
    values.reserve(k);
    for (std::size_t j : sent[i]) values.push_back(states[i].v[j]);
    const SparseUp received = send_to_server(transport.get(), i, SparseUp{gather(d, sent[i], values)});
    for (const auto& e : received.contribution.entries()) {
      sum[e.index] += e.value;
      in_union[e.index] = true;
    }
  }
  std::vector<SparseEntry> entries;
  const double workers = static_cast<double>(states.size());
  for (std::size_t j = 0; j < d; ++j) {
    if (in_union[j]) entries.push_back({j, sum[j] / workers});
  }
  KSparseVector update(d, std::move(entries));

  broadcast_update(states, update, lr, transport.get());
  // Each worker clears only what it sent itself.
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (std::size_t j : sent[i]) {
      states[i].u[j] = 0.0;
      states[i].v[j] = 0.0;
    }
  }
  RoundResult result;
  result.candidates = k;
  result.union_size = update.size();
  result.lr = lr;
  result.update = std::move(update);
  return result;
}

}  // namespace sketchsgd
