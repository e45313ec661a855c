#include "sketchsgd/heavy_hitters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sketchsgd/error.hpp"
#include "sketchsgd/random.hpp"

namespace sketchsgd {

ExactLookup dense_lookup(std::span<const double> values) {
  return [values](std::span<const std::size_t> indices) {
    std::vector<double> out;
    out.reserve(indices.size());
    for (std::size_t i : indices) {
      if (i >= values.size()) throw Error(ErrorCode::kIndexOutOfRange, "lookup index out of range");
      out.push_back(values[i]);
    }
    return out;
  };
}

namespace {

// Indices ordered by decreasing |value|, lower index first on ties.
void sort_by_magnitude(std::vector<std::size_t>& idx, std::span<const double> values) {
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
}

std::vector<std::size_t> largest_magnitude(std::span<const double> values, std::size_t count) {
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  count = std::min(count, idx.size());
  auto by_magnitude = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(count), idx.end(), by_magnitude);
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

HeavyMixResult heavymix_detailed(const CountSketch& sketch, std::size_t k, const ExactLookup& lookup,
                                 std::uint64_t rng_seed, PadStrategy pad) {
  const std::size_t d = sketch.dimension();
  if (k == 0 || k > d) {
    throw Error(ErrorCode::kKOutOfRange,
                "heavymix needs 1 <= k <= d (k=" + std::to_string(k) + ", d=" + std::to_string(d) + ")");
  }
  const double l2_sq = sketch.l2_squared_estimate();
  const std::vector<double> est = sketch.estimate_all();
  const double threshold = l2_sq / static_cast<double>(k);

  std::vector<std::size_t> heavy;
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < d; ++i) {
    // A zero estimate is never heavy, even when the threshold is zero.
    if (est[i] != 0.0 && est[i] * est[i] >= threshold) {
      heavy.push_back(i);
    } else {
      rest.push_back(i);
    }
  }
  if (heavy.size() > k) {
    sort_by_magnitude(heavy, est);
    rest.insert(rest.end(), heavy.begin() + static_cast<std::ptrdiff_t>(k), heavy.end());
    heavy.resize(k);
    std::sort(rest.begin(), rest.end());
  }

  const std::size_t l = k - heavy.size();
  std::vector<std::size_t> chosen = heavy;
  if (pad == PadStrategy::kUniform) {
    Rng rng(rng_seed);
    const std::vector<std::size_t> sampled = rng.sample_without_replacement(rest, l);
    chosen.insert(chosen.end(), sampled.begin(), sampled.end());
  } else {
    sort_by_magnitude(rest, est);
    chosen.insert(chosen.end(), rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(l));
  }
  std::sort(chosen.begin(), chosen.end());

  const std::vector<double> exact = lookup(chosen);
  if (exact.size() != chosen.size()) {
    throw Error(ErrorCode::kLookupFailure, "exact lookup returned " + std::to_string(exact.size()) +
                                               " values for " + std::to_string(chosen.size()) + " indices");
  }
  std::vector<SparseEntry> entries(chosen.size());
  for (std::size_t i = 0; i < chosen.size(); ++i) entries[i] = {chosen[i], exact[i]};
  return HeavyMixResult{KSparseVector(d, std::move(entries)), heavy.size(), l};
}

KSparseVector heavymix(const CountSketch& sketch, std::size_t k, const ExactLookup& lookup,
                       std::uint64_t rng_seed, PadStrategy pad) {
  return heavymix_detailed(sketch, k, lookup, rng_seed, pad).update;
}

std::string_view to_string(PadStrategy pad) noexcept {
  return pad == PadStrategy::kUniform ? "uniform" : "largest";
}

std::optional<PadStrategy> parse_pad_strategy(std::string_view s) noexcept {
  if (s == "uniform") return PadStrategy::kUniform;
  if (s == "largest") return PadStrategy::kLargestEstimate;
  return std::nullopt;
}

std::vector<std::size_t> top_pk_candidates(const CountSketch& sketch, std::size_t p, std::size_t k) {
  if (p == 0 || k == 0) throw Error(ErrorCode::kKOutOfRange, "top_pk_candidates needs P >= 1 and k >= 1");
  const std::vector<double> est = sketch.estimate_all();
  const std::size_t want = (k > est.size() / p) ? est.size() : std::min(est.size(), p * k);
  return largest_magnitude(est, want);
}

std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k) {
  return largest_magnitude(values, k);
}

std::vector<double> random_vector(VectorDistribution dist, std::size_t d, std::uint64_t seed,
                                  double zipf_exponent, std::size_t sparsity) {
  Rng rng(seed);
  std::vector<double> g(d, 0.0);
  switch (dist) {
    case VectorDistribution::kGaussian:
      for (auto& v : g) v = rng.normal();
      break;
    case VectorDistribution::kZipf: {
      std::vector<std::size_t> perm(d);
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t rank = 0; rank < d; ++rank) {
        const double magnitude = std::pow(static_cast<double>(rank + 1), -zipf_exponent);
        g[perm[rank]] = (rng.next_u64() & 1U) ? magnitude : -magnitude;
      }
      break;
    }
    case VectorDistribution::kSparse: {
      std::vector<std::size_t> all(d);
      std::iota(all.begin(), all.end(), std::size_t{0});
      for (std::size_t i : rng.sample_without_replacement(all, std::min(sparsity, d))) {
        double v = rng.normal();
        while (v == 0.0) v = rng.normal();
        g[i] = v;
      }
      break;
    }
  }
  return g;
}

double contraction_ratio(std::size_t d, std::size_t k, VectorDistribution dist, std::size_t trials,
                         std::uint64_t rng_seed, const ContractionOptions& options) {
  if (trials == 0) throw Error(ErrorCode::kInvalidConfig, "contraction_ratio needs trials >= 1");
  const SketchDims dims = size_for(k, d, options.delta, options.constants);
  const std::size_t sparsity = options.sparsity == 0 ? k : options.sparsity;
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(rng_seed, t);
    const std::vector<double> g =
        random_vector(dist, d, derive_seed(trial_seed, 1), options.zipf_exponent, sparsity);
    double norm_sq = 0.0;
    for (double v : g) norm_sq += v * v;
    if (norm_sq == 0.0) continue;
    const CountSketch s =
        CountSketch::from_dense(SketchConfig{d, dims.rows, dims.cols, derive_seed(trial_seed, 2)}, g);
    const KSparseVector approx = heavymix(s, k, dense_lookup(g), derive_seed(trial_seed, 3), options.pad);
    std::vector<double> diff = g;
    for (const auto& e : approx.entries()) diff[e.index] -= e.value;
    double residual = 0.0;
    for (double v : diff) residual += v * v;
    total += residual / norm_sq;
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

}  // namespace sketchsgd
