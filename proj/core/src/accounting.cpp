#include "sketchsgd/accounting.hpp"

#include <algorithm>

#include "sketchsgd/message.hpp"

namespace sketchsgd {

double compression_formula(double dimension, double sketch_size, double p, double k) noexcept {
  const double denom = sketch_size + p * k + k;
  return denom > 0.0 ? 2.0 * dimension / denom : 0.0;
}

double RoundStats::compression_factor() const noexcept {
  const double denom = static_cast<double>(up_sketch_elems + up_exact_elems + down_update_elems);
  return denom > 0.0 ? 2.0 * static_cast<double>(dimension) / denom : 0.0;
}

double RoundStats::byte_compression_factor() const noexcept {
  if (workers == 0) return 0.0;
  const double per_worker_request = static_cast<double>(request_bytes) / static_cast<double>(workers);
  const double denom =
      static_cast<double>(bytes_up_per_worker + bytes_down_per_worker) - per_worker_request;
  if (denom <= 0.0) return 0.0;
  return 2.0 * static_cast<double>(values_frame_bytes(dimension)) / denom;
}

void apply_traffic(RoundStats& stats, const RoundTraffic& traffic) {
  stats.bytes_up = traffic.total_up();
  stats.bytes_down = traffic.total_down();
  stats.request_bytes = traffic.total_request();
  stats.bytes_up_per_worker =
      traffic.up_bytes.empty() ? 0 : *std::max_element(traffic.up_bytes.begin(), traffic.up_bytes.end());
  stats.bytes_down_per_worker =
      traffic.down_bytes.empty() ? 0 : *std::max_element(traffic.down_bytes.begin(), traffic.down_bytes.end());
}

RoundStats account_round(const SketchDims& dims, std::size_t p, std::size_t k, std::size_t dimension,
                         std::size_t workers, const RoundTraffic& traffic) {
  RoundStats stats;
  stats.dimension = dimension;
  stats.workers = workers;
  stats.up_sketch_elems = dims.size();
  stats.up_exact_elems = std::min(p * k, dimension);
  stats.down_update_elems = k;
  apply_traffic(stats, traffic);
  return stats;
}

}  // namespace sketchsgd
