#include "sketchsgd/transport.hpp"

#include <numeric>
#include <string>

#include "sketchsgd/error.hpp"

namespace sketchsgd {

std::size_t RoundTraffic::total_up() const noexcept {
  return std::accumulate(up_bytes.begin(), up_bytes.end(), std::size_t{0});
}
std::size_t RoundTraffic::total_down() const noexcept {
  return std::accumulate(down_bytes.begin(), down_bytes.end(), std::size_t{0});
}
std::size_t RoundTraffic::total_request() const noexcept {
  return std::accumulate(request_bytes.begin(), request_bytes.end(), std::size_t{0});
}

namespace {

void check_worker(std::size_t worker, std::size_t workers) {
  if (worker >= workers) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "worker " + std::to_string(worker) + " out of range (W=" + std::to_string(workers) + ")");
  }
}

}  // namespace

Message DirectTransport::to_server(std::size_t worker, Message message) {
  check_worker(worker, workers_);
  return message;
}

Message DirectTransport::to_worker(std::size_t worker, Message message) {
  check_worker(worker, workers_);
  return message;
}

SerializingTransport::SerializingTransport(std::size_t workers, std::size_t dimension)
    : dimension_(dimension), traffic_(workers) {}

void SerializingTransport::begin_round() { traffic_ = RoundTraffic(traffic_.workers()); }

Message SerializingTransport::to_server(std::size_t worker, Message message) {
  check_worker(worker, traffic_.workers());
  const std::vector<std::byte> frame = encode(message);
  traffic_.up_bytes[worker] += frame.size();
  return decode(frame, dimension_);
}

Message SerializingTransport::to_worker(std::size_t worker, Message message) {
  check_worker(worker, traffic_.workers());
  const bool is_request = std::holds_alternative<ExactRequest>(message);
  const std::vector<std::byte> frame = encode(message);
  traffic_.down_bytes[worker] += frame.size();
  if (is_request) traffic_.request_bytes[worker] += frame.size();
  return decode(frame, dimension_);
}

std::vector<double> exact_lookup_round(std::span<const std::vector<double>> accumulators,
                                       std::span<const std::size_t> indices, Transport& transport) {
  if (accumulators.size() != transport.workers() || accumulators.empty()) {
    throw Error(ErrorCode::kDimensionMismatch, "exact_lookup_round: accumulator count must equal W >= 1");
  }
  std::vector<double> sum(indices.size(), 0.0);
  for (std::size_t w = 0; w < accumulators.size(); ++w) {
    const ExactRequest request = send_to_worker(
        transport, w, ExactRequest{std::vector<std::size_t>(indices.begin(), indices.end())});
    const auto& acc = accumulators[w];
    ExactUp reply;
    reply.values.reserve(request.indices.size());
    for (std::size_t i : request.indices) {
      if (i >= acc.size()) throw Error(ErrorCode::kIndexOutOfRange, "exact lookup index out of range");
      reply.values.push_back(acc[i]);
    }
    const ExactUp received = send_to_server(transport, w, std::move(reply));
    if (received.values.size() != sum.size()) {
      throw Error(ErrorCode::kLookupFailure, "worker " + std::to_string(w) + " returned wrong value count");
    }
    for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += received.values[j];
  }
  const double workers = static_cast<double>(accumulators.size());
  for (auto& v : sum) v /= workers;
  return sum;
}

}  // namespace sketchsgd
