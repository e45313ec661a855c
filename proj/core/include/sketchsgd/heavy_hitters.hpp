#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sketchsgd/count_sketch.hpp"
#include "sketchsgd/sparse_vector.hpp"

namespace sketchsgd {

// Second communication round: exact aggregated values of the sketched vector
// at the requested indices, in request order.
using ExactLookup = std::function<std::vector<double>(std::span<const std::size_t> indices)>;

// Wraps a dense vector as an ExactLookup (tests and single-process use).
ExactLookup dense_lookup(std::span<const double> values);

// How the k - |H| slots left after the heavy set are filled.
enum class PadStrategy {
  kUniform,          // uniform sample without replacement from the non-heavy set
  kLargestEstimate,  // the non-heavy coordinates with largest |estimate|, lower index on ties
};

struct HeavyMixResult {
  KSparseVector update;
  // Coordinates whose squared estimate cleared the l2^2 / k threshold.
  std::size_t heavy_count = 0;
  // Coordinates padded in from the non-heavy set.
  std::size_t sampled_count = 0;
};

// HEAVYMIX: estimate l2^2 and every coordinate from the sketch, keep the set H
// of coordinates with est_i^2 >= l2^2 / k (the k largest |est_i| if more
// qualify), pad with k - |H| coordinates sampled uniformly without replacement
// from the rest, and return the exact values of that union from `lookup`.
//
// Requires 1 <= k <= d. The contraction guarantee holds for k <= d/2; larger
// k is accepted but lies outside it.
HeavyMixResult heavymix_detailed(const CountSketch& sketch, std::size_t k, const ExactLookup& lookup,
                                 std::uint64_t rng_seed, PadStrategy pad = PadStrategy::kUniform);

KSparseVector heavymix(const CountSketch& sketch, std::size_t k, const ExactLookup& lookup,
                       std::uint64_t rng_seed, PadStrategy pad = PadStrategy::kUniform);

// The min(pk, d) indices with largest |point estimate|, lower index first
// among ties, returned in increasing index order.
std::vector<std::size_t> top_pk_candidates(const CountSketch& sketch, std::size_t p, std::size_t k);

// Exact top-k of |values| (ties to lower index), returned in increasing index order.
std::vector<std::size_t> top_k_indices(std::span<const double> values, std::size_t k);

std::string_view to_string(PadStrategy pad) noexcept;
std::optional<PadStrategy> parse_pad_strategy(std::string_view s) noexcept;

enum class VectorDistribution { kGaussian, kZipf, kSparse };

// Random test vectors: Gaussian entries; Zipf(exponent) magnitudes rank^-s
// on a random permutation with random signs; or `sparsity` Gaussian nonzeros.
std::vector<double> random_vector(VectorDistribution dist, std::size_t d, std::uint64_t seed,
                                  double zipf_exponent = 1.2, std::size_t sparsity = 0);

struct ContractionOptions {
  double delta = 0.05;
  SizeConstants constants{};
  double zipf_exponent = 1.2;
  // Nonzeros for kSparse; 0 means k.
  std::size_t sparsity = 0;
  PadStrategy pad = PadStrategy::kUniform;
};

// Monte-Carlo mean of ||g - heavymix(S(g))||^2 / ||g||^2 over fresh vectors
// and fresh sketch seeds, sketches sized by size_for(k, d, delta). Test oracle.
double contraction_ratio(std::size_t d, std::size_t k, VectorDistribution dist, std::size_t trials,
                         std::uint64_t rng_seed, const ContractionOptions& options = {});

}  // namespace sketchsgd
