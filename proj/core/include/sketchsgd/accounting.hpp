#pragma once

#include <cstddef>

#include "sketchsgd/count_sketch.hpp"
#include "sketchsgd/transport.hpp"

namespace sketchsgd {

// Elements and bytes moved in one round. Element counts are per worker.
struct RoundStats {
  std::size_t dimension = 0;
  std::size_t workers = 0;
  std::size_t up_sketch_elems = 0;    // |S| = r * c
  std::size_t up_exact_elems = 0;     // second-round values (or dense/sparse upload for baselines)
  std::size_t down_update_elems = 0;  // broadcast update entries
  std::size_t bytes_up = 0;           // all workers
  std::size_t bytes_down = 0;         // all workers, including requests
  std::size_t request_bytes = 0;      // ExactRequest frames, excluded from the element formula
  std::size_t bytes_up_per_worker = 0;
  std::size_t bytes_down_per_worker = 0;

  // 2d / (|S| + exact + update); 0 when nothing was sent.
  double compression_factor() const noexcept;
  // Two dense value frames over the measured per-worker bytes, request frames excluded.
  double byte_compression_factor() const noexcept;
};

// 2d / (|S| + P k + k).
double compression_formula(double dimension, double sketch_size, double p, double k) noexcept;

// Element counts from the configuration (exact = min(Pk, d), update = k),
// byte counts from the measured traffic.
RoundStats account_round(const SketchDims& dims, std::size_t p, std::size_t k, std::size_t dimension,
                         std::size_t workers, const RoundTraffic& traffic);

// Fills only the byte fields of `stats` from measured traffic.
void apply_traffic(RoundStats& stats, const RoundTraffic& traffic);

}  // namespace sketchsgd
