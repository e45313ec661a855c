#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "sketchsgd/count_sketch.hpp"
#include "sketchsgd/sparse_vector.hpp"

namespace sketchsgd {

enum class MessageTag : std::uint8_t {
  kSketchUp = 1,
  kExactRequest = 2,
  kExactUp = 3,
  kUpdateDown = 4,
  // Baseline traffic.
  kSparseUp = 5,
  kDenseVector = 6,
};

struct SketchUp {
  CountSketch sketch;
};
// Strictly increasing indices; encoded as deltas in LEB128 varints.
struct ExactRequest {
  std::vector<std::size_t> indices;
};
struct ExactUp {
  std::vector<double> values;
};
struct UpdateDown {
  KSparseVector update;
};
struct SparseUp {
  KSparseVector contribution;
};
struct DenseVector {
  std::vector<double> values;
};

using Message = std::variant<SketchUp, ExactRequest, ExactUp, UpdateDown, SparseUp, DenseVector>;

MessageTag tag_of(const Message& message) noexcept;

// Frame layout: u8 tag, u32 payload length (little-endian), payload.
inline constexpr std::size_t kFrameHeaderBytes = 5;

std::vector<std::byte> encode(const Message& message);
// `dimension` is the receiver's model dimension, used to validate sparse indices.
Message decode(std::span<const std::byte> frame, std::size_t dimension);

// Frame lengths without building the frame.
std::size_t sketch_frame_bytes(std::size_t rows, std::size_t cols) noexcept;
std::size_t values_frame_bytes(std::size_t count) noexcept;
std::size_t sparse_frame_bytes(std::size_t count) noexcept;

}  // namespace sketchsgd
