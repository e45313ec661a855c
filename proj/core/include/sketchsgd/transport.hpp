#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sketchsgd/message.hpp"

namespace sketchsgd {

// Bytes moved in one round of the star topology, per worker.
struct RoundTraffic {
  std::vector<std::size_t> up_bytes;       // worker -> server, all messages
  std::vector<std::size_t> down_bytes;     // server -> worker, all messages
  std::vector<std::size_t> request_bytes;  // ExactRequest frames (subset of down_bytes)

  explicit RoundTraffic(std::size_t workers = 0)
      : up_bytes(workers, 0), down_bytes(workers, 0), request_bytes(workers, 0) {}

  std::size_t workers() const noexcept { return up_bytes.size(); }
  std::size_t total_up() const noexcept;
  std::size_t total_down() const noexcept;
  std::size_t total_request() const noexcept;
};

// Channel between the parameter server and its workers. Each call returns the
// message as the receiving side sees it.
class Transport {
 public:
  virtual ~Transport() = default;

  virtual std::size_t workers() const noexcept = 0;
  virtual Message to_server(std::size_t worker, Message message) = 0;
  virtual Message to_worker(std::size_t worker, Message message) = 0;
};

// Passes messages through untouched; no accounting.
class DirectTransport final : public Transport {
 public:
  explicit DirectTransport(std::size_t workers) : workers_(workers) {}

  std::size_t workers() const noexcept override { return workers_; }
  Message to_server(std::size_t worker, Message message) override;
  Message to_worker(std::size_t worker, Message message) override;

 private:
  std::size_t workers_;
};

// Serializes every message, records its frame length, and hands the receiver
// the decoded copy, so accounting reflects real wire bytes.
class SerializingTransport final : public Transport {
 public:
  SerializingTransport(std::size_t workers, std::size_t dimension);

  std::size_t workers() const noexcept override { return traffic_.workers(); }
  Message to_server(std::size_t worker, Message message) override;
  Message to_worker(std::size_t worker, Message message) override;

  void begin_round();
  const RoundTraffic& traffic() const noexcept { return traffic_; }

 private:
  std::size_t dimension_;
  RoundTraffic traffic_;
};

template <typename T>
T send_to_server(Transport& transport, std::size_t worker, T message) {
  return std::get<T>(transport.to_server(worker, Message{std::move(message)}));
}

template <typename T>
T send_to_worker(Transport& transport, std::size_t worker, T message) {
  return std::get<T>(transport.to_worker(worker, Message{std::move(message)}));
}

// Second round: the server sends each worker the (sorted) index list, each
// worker answers with its accumulator values there, and the server returns
// (1/W) * sum over workers, reduced in worker order.
std::vector<double> exact_lookup_round(std::span<const std::vector<double>> accumulators,
                                       std::span<const std::size_t> indices, Transport& transport);

}  // namespace sketchsgd
