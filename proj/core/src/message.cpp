#include "sketchsgd/message.hpp"

#include <limits>
#include <string>

#include "bytes.hpp"
#include "sketchsgd/error.hpp"

namespace sketchsgd {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::uint32_t checked_count(std::size_t n) {
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidConfig, "message element count exceeds u32");
  }
  return static_cast<std::uint32_t>(n);
}

void put_values(detail::ByteWriter& w, const std::vector<double>& values) {
  w.put_u32(checked_count(values.size()));
  for (double v : values) w.put_f64(v);
}

void put_sparse(detail::ByteWriter& w, const KSparseVector& v) {
  w.put_u32(checked_count(v.size()));
  for (const auto& e : v.entries()) {
    w.put_u64(e.index);
    w.put_f64(e.value);
  }
}

std::vector<double> get_values(detail::ByteReader& r) {
  const std::uint32_t n = r.get_u32();
  if (r.remaining() < 8ULL * n) throw Error(ErrorCode::kCorruptMessage, "value list truncated");
  std::vector<double> out(n);
  for (auto& v : out) v = r.get_f64();
  return out;
}

KSparseVector get_sparse(detail::ByteReader& r, std::size_t dimension) {
  const std::uint32_t n = r.get_u32();
  if (r.remaining() < 16ULL * n) throw Error(ErrorCode::kCorruptMessage, "sparse vector truncated");
  std::vector<SparseEntry> entries(n);
  for (auto& e : entries) {
    e.index = static_cast<std::size_t>(r.get_u64());
    e.value = r.get_f64();
  }
  return KSparseVector(dimension, std::move(entries));
}

}  // namespace

MessageTag tag_of(const Message& message) noexcept {
  return std::visit(Overloaded{
                        [](const SketchUp&) { return MessageTag::kSketchUp; },
                        [](const ExactRequest&) { return MessageTag::kExactRequest; },
                        [](const ExactUp&) { return MessageTag::kExactUp; },
                        [](const UpdateDown&) { return MessageTag::kUpdateDown; },
                        [](const SparseUp&) { return MessageTag::kSparseUp; },
                        [](const DenseVector&) { return MessageTag::kDenseVector; },
                    },
                    message);
}

std::vector<std::byte> encode(const Message& message) {
  std::vector<std::byte> payload;
  detail::ByteWriter w(payload);
  std::visit(Overloaded{
                 [&](const SketchUp& m) { payload = m.sketch.serialize(); },
                 [&](const ExactRequest& m) {
                   w.put_u32(checked_count(m.indices.size()));
                   std::size_t prev = 0;
                   for (std::size_t i = 0; i < m.indices.size(); ++i) {
                     const std::size_t idx = m.indices[i];
                     if (i > 0 && idx <= prev) {
                       throw Error(ErrorCode::kInvalidConfig, "ExactRequest indices must be strictly increasing");
                     }
                     w.put_varint(i == 0 ? idx : idx - prev);
                     prev = idx;
                   }
                 },
                 [&](const ExactUp& m) { put_values(w, m.values); },
                 [&](const UpdateDown& m) { put_sparse(w, m.update); },
                 [&](const SparseUp& m) { put_sparse(w, m.contribution); },
                 [&](const DenseVector& m) { put_values(w, m.values); },
             },
             message);

  std::vector<std::byte> frame;
  frame.reserve(kFrameHeaderBytes + payload.size());
  detail::ByteWriter fw(frame);
  fw.put_u8(static_cast<std::uint8_t>(tag_of(message)));
  fw.put_u32(checked_count(payload.size()));
  fw.put_bytes(payload);
  return frame;
}

Message decode(std::span<const std::byte> frame, std::size_t dimension) {
  detail::ByteReader fr(frame);
  const std::uint8_t tag = fr.get_u8();
  const std::uint32_t length = fr.get_u32();
  if (fr.remaining() != length) {
    throw Error(ErrorCode::kCorruptMessage, "frame payload length " + std::to_string(length) +
                                                " does not match " + std::to_string(fr.remaining()) +
                                                " bytes received");
  }
  const auto payload = fr.get_bytes(length);
  detail::ByteReader r(payload);
  Message out;
  switch (static_cast<MessageTag>(tag)) {
    case MessageTag::kSketchUp:
      return SketchUp{CountSketch::deserialize(payload)};
    case MessageTag::kExactRequest: {
      const std::uint32_t n = r.get_u32();
      ExactRequest req;
      req.indices.reserve(n);
      std::size_t prev = 0;
      for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint64_t delta = r.get_varint();
        if (i > 0 && delta == 0) throw Error(ErrorCode::kCorruptMessage, "zero delta in ExactRequest");
        prev = (i == 0) ? delta : prev + delta;
        if (prev >= dimension) throw Error(ErrorCode::kIndexOutOfRange, "ExactRequest index out of range");
        req.indices.push_back(prev);
      }
      out = std::move(req);
      break;
    }
    case MessageTag::kExactUp:
      out = ExactUp{get_values(r)};
      break;
    case MessageTag::kUpdateDown:
      out = UpdateDown{get_sparse(r, dimension)};
      break;
    case MessageTag::kSparseUp:
      out = SparseUp{get_sparse(r, dimension)};
      break;
    case MessageTag::kDenseVector:
      out = DenseVector{get_values(r)};
      break;
    default:
      throw Error(ErrorCode::kCorruptMessage, "unknown message tag " + std::to_string(tag));
  }
  if (!r.done()) throw Error(ErrorCode::kCorruptMessage, "trailing bytes in message payload");
  return out;
}

std::size_t sketch_frame_bytes(std::size_t rows, std::size_t cols) noexcept {
  return kFrameHeaderBytes + CountSketch::serialized_size(rows, cols);
}
std::size_t values_frame_bytes(std::size_t count) noexcept { return kFrameHeaderBytes + 4 + 8 * count; }
std::size_t sparse_frame_bytes(std::size_t count) noexcept { return kFrameHeaderBytes + 4 + 16 * count; }

}  // namespace sketchsgd
