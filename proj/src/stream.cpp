#include "spinr/stream.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <zlib.h>

#include "spinr/errors.hpp"

namespace spinr::stream {

namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) {
    out_.push_back(static_cast<std::uint8_t>(v));
    out_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

 private:
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}
  std::uint8_t u8() { return in_[pos_++]; }
  std::uint16_t u16() {
    const auto v = static_cast<std::uint16_t>(in_[pos_] | (in_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

constexpr std::size_t kChunkPrefix = 6;  // id, dtype, rows, cols
constexpr std::size_t kQuantParams = 8;  // scale, zero
constexpr std::size_t kCrcSize = 4;

std::size_t dtype_width(std::uint8_t dtype) {
  switch (static_cast<QuantMode>(dtype)) {
    case QuantMode::kFloat32:
      return 4;
    case QuantMode::kAffine8:
      return 1;
    case QuantMode::kAffine16:
      return 2;
  }
  return 0;
}

double dtype_levels(std::uint8_t dtype) {
  return static_cast<QuantMode>(dtype) == QuantMode::kAffine8 ? 255.0 : 65535.0;
}

bool quantized(std::uint8_t dtype) { return dtype != static_cast<std::uint8_t>(QuantMode::kFloat32); }

// Values of a chunk in wire order: weights row-major, then bias.
std::vector<double> flatten(const Eigen::MatrixXd& weights, const Eigen::VectorXd* bias) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(weights.size() + (bias ? bias->size() : 0)));
  for (Eigen::Index r = 0; r < weights.rows(); ++r)
    for (Eigen::Index c = 0; c < weights.cols(); ++c) v.push_back(weights(r, c));
  if (bias)
    for (Eigen::Index i = 0; i < bias->size(); ++i) v.push_back((*bias)[i]);
  return v;
}

std::vector<std::uint8_t> encode_record(std::uint8_t id, std::uint8_t dtype,
                                        const Eigen::MatrixXd& weights,
                                        const Eigen::VectorXd* bias) {
  std::vector<std::uint8_t> out;
  Writer w(out);
  w.u8(id);
  w.u8(dtype);
  w.u16(static_cast<std::uint16_t>(weights.rows()));
  w.u16(static_cast<std::uint16_t>(weights.cols()));
  const std::vector<double> values = flatten(weights, bias);

  if (!quantized(dtype)) {
    for (double v : values) w.f32(static_cast<float>(v));
  } else {
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    const double levels = dtype_levels(dtype);
    const float zero = static_cast<float>(*lo);
    const float scale = static_cast<float>((*hi - *lo) / levels);
    w.f32(scale);
    w.f32(zero);
    for (double v : values) {
      double q = 0.0;
      if (scale > 0.0f)
        q = std::clamp(std::round((v - static_cast<double>(zero)) / static_cast<double>(scale)),
                       0.0, levels);
      if (dtype_width(dtype) == 1)
        w.u8(static_cast<std::uint8_t>(q));
      else
        w.u16(static_cast<std::uint16_t>(q));
    }
  }
  w.u32(crc32(out));
  return out;
}

void check_encodable(const ModelSpec& spec) {
  spec.validate();
  if (spec.width > std::numeric_limits<std::uint16_t>::max())
    throw std::invalid_argument("serialize: width does not fit the u16 header field");
  if (spec.hidden_layers > 252)
    throw std::invalid_argument("serialize: too many hidden layers for u8 chunk ids");
  if (spec.family == Family::kFourier &&
      spec.fourier_features > std::numeric_limits<std::uint16_t>::max())
    throw std::invalid_argument("serialize: fourier_features does not fit u16");
}

}  // namespace

std::string_view to_string(QuantMode mode) {
  switch (mode) {
    case QuantMode::kFloat32:
      return "f32";
    case QuantMode::kAffine8:
      return "u8";
    case QuantMode::kAffine16:
      return "u16";
  }
  return "unknown";
}

QuantMode parse_quant_mode(std::string_view name) {
  if (name == "f32") return QuantMode::kFloat32;
  if (name == "u8") return QuantMode::kAffine8;
  if (name == "u16") return QuantMode::kAffine16;
  throw std::invalid_argument("unknown quantization mode '" + std::string(name) + "'");
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto n = static_cast<uInt>(
        std::min<std::size_t>(bytes.size() - offset, std::numeric_limits<uInt>::max()));
    crc = ::crc32(crc, bytes.data() + offset, n);
    offset += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> StreamHeader::encode() const {
  check_encodable(spec);
  std::vector<std::uint8_t> out(kMagic.begin(), kMagic.end());
  Writer w(out);
  w.u8(kVersion);
  w.u8(static_cast<std::uint8_t>(quant));
  w.u8(static_cast<std::uint8_t>(spec.family));
  w.u8(static_cast<std::uint8_t>(spec.hidden_layers));
  w.u16(static_cast<std::uint16_t>(spec.width));
  const bool fourier = spec.family == Family::kFourier;
  w.u16(static_cast<std::uint16_t>(fourier ? spec.fourier_features : 0));
  w.f32(static_cast<float>(fourier ? spec.fourier_sigma : spec.omega0));
  w.u8(chunk_count);
  return out;
}

StreamHeader StreamHeader::decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kHeaderSize) throw ParseError("stream: truncated header", bytes.size());
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin()))
    throw ParseError("stream: bad magic", 0);
  Reader r(bytes.subspan(4));
  const std::uint8_t version = r.u8();
  if (version != kVersion)
    throw ParseError("stream: unsupported version " + std::to_string(version), 4);
  StreamHeader h;
  const std::uint8_t quant = r.u8();
  if (quant > 2) throw ParseError("stream: unknown quant mode " + std::to_string(quant), 5);
  h.quant = static_cast<QuantMode>(quant);
  const std::uint8_t family = r.u8();
  if (family > 1) throw ParseError("stream: unknown family " + std::to_string(family), 6);
  h.spec.family = static_cast<Family>(family);
  h.spec.hidden_layers = r.u8();
  h.spec.width = r.u16();
  const int m = r.u16();
  const float param = r.f32();
  if (h.spec.family == Family::kFourier) {
    h.spec.fourier_features = m;
    h.spec.fourier_sigma = param;
  } else {
    h.spec.omega0 = param;
    if (m != 0) throw ParseError("stream: siren header with fourier features", 10);
  }
  h.chunk_count = r.u8();
  try {
    h.spec.validate();
    check_encodable(h.spec);
  } catch (const std::invalid_argument& e) {
    throw ParseError(std::string("stream: invalid model descriptor: ") + e.what(), 7);
  }
  if (h.chunk_count > h.send_order().size())
    throw ParseError("stream: chunk_count exceeds the model's chunk count", 16);
  return h;
}

std::vector<std::uint8_t> StreamHeader::send_order() const {
  std::vector<std::uint8_t> ids;
  if (spec.family == Family::kFourier) ids.push_back(kEncodingChunk);
  ids.push_back(chunk_for_layer(0));
  ids.push_back(chunk_for_layer(spec.output_index()));
  for (std::size_t l = 1; l < spec.output_index(); ++l) ids.push_back(chunk_for_layer(l));
  return ids;
}

std::optional<ChunkLayout> expected_layout(const StreamHeader& header, std::uint8_t id) {
  const ModelSpec& spec = header.spec;
  ChunkLayout layout;
  layout.id = id;
  if (id == kEncodingChunk) {
    if (spec.family != Family::kFourier) return std::nullopt;
    layout.dtype = static_cast<std::uint8_t>(QuantMode::kFloat32);
    layout.rows = static_cast<std::uint16_t>(spec.fourier_features);
    layout.cols = ModelSpec::kCoordDim;
    layout.has_bias = false;
  } else {
    const std::size_t layer = id - 1u;
    if (layer > spec.output_index()) return std::nullopt;
    layout.dtype = static_cast<std::uint8_t>(header.quant);
    layout.cols = static_cast<std::uint16_t>(layer == 0 ? spec.input_features() : spec.width);
    layout.rows = static_cast<std::uint16_t>(layer == spec.output_index() ? ModelSpec::kOutputDim
                                                                          : spec.width);
  }
  const std::size_t values =
      static_cast<std::size_t>(layout.rows) * layout.cols + (layout.has_bias ? layout.rows : 0);
  layout.record_size = kChunkPrefix + (quantized(layout.dtype) ? kQuantParams : 0) +
                       values * dtype_width(layout.dtype) + kCrcSize;
  return layout;
}

std::vector<std::uint8_t> Bitstream::bytes() const {
  StreamHeader h = header;
  h.chunk_count = static_cast<std::uint8_t>(chunks.size());
  std::vector<std::uint8_t> out = h.encode();
  for (const auto& c : chunks) out.insert(out.end(), c.begin(), c.end());
  return out;
}

std::size_t Bitstream::size() const {
  std::size_t n = kHeaderSize;
  for (const auto& c : chunks) n += c.size();
  return n;
}

Bitstream Bitstream::truncated_to_stage(int stage) const {
  if (stage < 1) throw std::invalid_argument("truncated_to_stage: stage must be >= 1");
  Bitstream out;
  out.header = header;
  const std::size_t out_layer = header.spec.output_index();
  for (const auto& c : chunks) {
    const std::uint8_t id = c.front();
    const bool keep = id == kEncodingChunk || id == chunk_for_layer(0) ||
                      id == chunk_for_layer(out_layer) ||
                      id - 1u < static_cast<std::size_t>(stage);
    if (keep) out.chunks.push_back(c);
  }
  out.header.chunk_count = static_cast<std::uint8_t>(out.chunks.size());
  return out;
}

Bitstream serialize(const ParamSet& model, const ModelSpec& spec, QuantMode mode) {
  check_encodable(spec);
  model.validate();
  if (model.layer_count() != spec.layer_count() ||
      static_cast<std::size_t>(model.param_count()) != spec.param_count())
    throw std::invalid_argument("serialize: model does not match its spec");

  Bitstream stream;
  stream.header.quant = mode;
  stream.header.spec = spec;
  for (std::uint8_t id : stream.header.send_order()) {
    if (id == kEncodingChunk) {
      stream.chunks.push_back(encode_record(id, static_cast<std::uint8_t>(QuantMode::kFloat32),
                                            model.encoding, nullptr));
    } else {
      const auto& layer = model.layers[id - 1u];
      stream.chunks.push_back(
          encode_record(id, static_cast<std::uint8_t>(mode), layer.weights, &layer.bias));
    }
  }
  stream.header.chunk_count = static_cast<std::uint8_t>(stream.chunks.size());
  return stream;
}

ChunkParse parse_chunk(std::span<const std::uint8_t> bytes, const StreamHeader& header) {
  ChunkParse result;
  if (bytes.size() < kChunkPrefix) return result;
  Reader r(bytes);
  const std::uint8_t id = r.u8();
  const std::uint8_t dtype = r.u8();
  const std::uint16_t rows = r.u16();
  const std::uint16_t cols = r.u16();
  const auto layout = expected_layout(header, id);
  if (!layout || layout->dtype != dtype || layout->rows != rows || layout->cols != cols) {
    result.status = ChunkStatus::kBadLayout;
    return result;
  }
  result.size = layout->record_size;
  if (bytes.size() < layout->record_size) {
    result.status = ChunkStatus::kTruncated;
    return result;
  }
  const auto body = bytes.first(layout->record_size - kCrcSize);
  Reader crc_reader(bytes.subspan(layout->record_size - kCrcSize));
  if (crc32(body) != crc_reader.u32()) {
    result.status = ChunkStatus::kCrcMismatch;
    return result;
  }

  double scale = 0.0, zero = 0.0;
  if (quantized(dtype)) {
    scale = r.f32();
    zero = r.f32();
    if (!std::isfinite(scale) || !std::isfinite(zero) || scale < 0.0) {
      result.status = ChunkStatus::kBadLayout;
      return result;
    }
  }
  auto next_value = [&]() -> double {
    switch (static_cast<QuantMode>(dtype)) {
      case QuantMode::kFloat32:
        return static_cast<double>(r.f32());
      case QuantMode::kAffine8:
        return zero + scale * r.u8();
      case QuantMode::kAffine16:
        return zero + scale * r.u16();
    }
    return 0.0;
  };

  DecodedChunk chunk;
  chunk.id = id;
  chunk.weights.resize(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) chunk.weights(i, j) = next_value();
  if (layout->has_bias) {
    chunk.bias.resize(rows);
    for (Eigen::Index i = 0; i < rows; ++i) chunk.bias[i] = next_value();
  }
  result.status = ChunkStatus::kOk;
  result.chunk = std::move(chunk);
  return result;
}

ParamSet empty_model(const StreamHeader& header) {
  ParamSet model = build_model(header.spec, 0).zeros_like();
  return model;
}

void install_chunk(ParamSet& model, const DecodedChunk& chunk) {
  if (chunk.id == kEncodingChunk) {
    if (model.encoding.rows() != chunk.weights.rows() ||
        model.encoding.cols() != chunk.weights.cols())
      throw std::invalid_argument("install_chunk: encoding shape mismatch");
    model.encoding = chunk.weights;
    return;
  }
  auto& layer = model.layers.at(chunk.id - 1u);
  if (layer.weights.rows() != chunk.weights.rows() || layer.weights.cols() != chunk.weights.cols())
    throw std::invalid_argument("install_chunk: layer shape mismatch");
  layer.weights = chunk.weights;
  layer.bias = chunk.bias;
}

DecodeResult deserialize(std::span<const std::uint8_t> bytes, DecodeMode mode) {
  DecodeResult result;
  result.header = StreamHeader::decode(bytes);
  result.model = empty_model(result.header);
  const std::vector<std::uint8_t> expected = result.header.send_order();

  std::vector<std::size_t> sizes;
  for (std::uint8_t id : expected) sizes.push_back(expected_layout(result.header, id)->record_size);
  std::sort(sizes.begin(), sizes.end());
  sizes.erase(std::unique(sizes.begin(), sizes.end()), sizes.end());

  struct Damaged {
    std::uint8_t stored_id;
    std::size_t extent;  // 0 when the rest of the stream had to be abandoned
  };
  std::vector<Damaged> damaged;

  auto parses_at = [&](std::size_t offset) {
    return offset == bytes.size() ||
           (offset < bytes.size() &&
            parse_chunk(bytes.subspan(offset), result.header).status == ChunkStatus::kOk);
  };

  std::size_t offset = kHeaderSize;
  while (offset < bytes.size()) {
    ChunkParse p = parse_chunk(bytes.subspan(offset), result.header);
    if (p.status == ChunkStatus::kOk) {
      if (!result.present.contains(p.chunk->id)) {
        install_chunk(result.model, *p.chunk);
        result.present.insert(p.chunk->id);
      }
      offset += p.size;
      continue;
    }
    // Find where the damaged record ends: its own declared size if that
    // still leads to a verifiable boundary, else any legal record size.
    std::size_t extent = 0;
    if (p.size > 0 && parses_at(offset + p.size)) extent = p.size;
    for (std::size_t i = 0; extent == 0 && i < sizes.size(); ++i)
      if (parses_at(offset + sizes[i])) extent = sizes[i];
    damaged.push_back({bytes[offset], extent});
    if (extent == 0) break;
    offset += extent;
  }

  // Attribute each damaged record to an id that never verified, preferring
  // the id byte it carries when that is consistent with its extent.
  for (const auto& d : damaged) {
    std::vector<std::uint8_t> candidates;
    for (std::uint8_t id : expected) {
      if (result.present.contains(id) || result.corrupt.contains(id)) continue;
      if (d.extent == 0 || expected_layout(result.header, id)->record_size == d.extent)
        candidates.push_back(id);
    }
    if (candidates.empty()) continue;
    const bool stored_ok =
        std::find(candidates.begin(), candidates.end(), d.stored_id) != candidates.end();
    result.corrupt.insert(stored_ok ? d.stored_id : candidates.front());
  }
  for (std::uint8_t id : expected)
    if (!result.present.contains(id) && !result.corrupt.contains(id)) result.missing.insert(id);

  if (mode == DecodeMode::kStrict && !result.complete()) {
    std::string what = "stream: incomplete model (";
    what += std::to_string(result.missing.size()) + " missing, " +
            std::to_string(result.corrupt.size()) + " corrupt chunks)";
    throw DecodeError(what);
  }
  return result;
}

Bitstream split_records(std::span<const std::uint8_t> bytes) {
  Bitstream stream;
  stream.header = StreamHeader::decode(bytes);
  std::set<std::uint8_t> seen;
  std::size_t offset = kHeaderSize;
  while (offset < bytes.size()) {
    const ChunkParse p = parse_chunk(bytes.subspan(offset), stream.header);
    if (p.status != ChunkStatus::kOk)
      throw DecodeError("stream: damaged chunk record at byte " + std::to_string(offset));
    if (!seen.insert(p.chunk->id).second)
      throw DecodeError("stream: duplicate chunk " + std::to_string(p.chunk->id));
    stream.chunks.emplace_back(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                               bytes.begin() + static_cast<std::ptrdiff_t>(offset + p.size));
    offset += p.size;
  }
  if (stream.chunks.size() != stream.header.chunk_count)
    throw DecodeError("stream: header announces " + std::to_string(stream.header.chunk_count) +
                      " chunks, found " + std::to_string(stream.chunks.size()));
  return stream;
}

ParamSet wire_roundtrip(const ParamSet& model, const ModelSpec& spec, QuantMode mode) {
  return deserialize(serialize(model, spec, mode).bytes(), DecodeMode::kStrict).model;
}

std::vector<std::uint8_t> Packet::encode() const {
  std::vector<std::uint8_t> out;
  out.reserve(kPacketHeaderSize + payload.size());
  Writer w(out);
  w.u8(chunk_id);
  w.u16(frag_index);
  w.u16(frag_count);
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

Packet Packet::decode(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kPacketHeaderSize) throw ParseError("packet: truncated header", bytes.size());
  Reader r(bytes);
  Packet p;
  p.chunk_id = r.u8();
  p.frag_index = r.u16();
  p.frag_count = r.u16();
  if (p.frag_count == 0 || p.frag_index >= p.frag_count)
    throw ParseError("packet: fragment index out of range", 1);
  p.payload.assign(bytes.begin() + kPacketHeaderSize, bytes.end());
  return p;
}

std::vector<Packet> fragment(const Bitstream& stream, std::size_t payload_size) {
  if (payload_size == 0) throw std::invalid_argument("fragment: payload size must be > 0");
  std::vector<Packet> packets;
  for (const auto& record : stream.chunks) {
    const std::size_t count = (record.size() + payload_size - 1) / payload_size;
    if (count > std::numeric_limits<std::uint16_t>::max())
      throw std::invalid_argument("fragment: chunk needs more than 65535 fragments");
    for (std::size_t i = 0; i < count; ++i) {
      Packet p;
      p.chunk_id = record.front();
      p.frag_index = static_cast<std::uint16_t>(i);
      p.frag_count = static_cast<std::uint16_t>(count);
      const std::size_t begin = i * payload_size;
      const std::size_t end = std::min(record.size(), begin + payload_size);
      p.payload.assign(record.begin() + static_cast<std::ptrdiff_t>(begin),
                       record.begin() + static_cast<std::ptrdiff_t>(end));
      packets.push_back(std::move(p));
    }
  }
  return packets;
}

void ChannelConfig::validate() const {
  if (packet_size == 0) throw std::invalid_argument("ChannelConfig: packet size must be > 0");
  if (!(loss_probability >= 0.0 && loss_probability <= 1.0))
    throw std::invalid_argument("ChannelConfig: loss probability must be in [0, 1]");
}

LossyChannel::LossyChannel(const ChannelConfig& config)
    : loss_probability_(config.loss_probability), rng_(config.seed, RngStream::kChannel) {
  config.validate();
}

bool LossyChannel::deliver() { return !rng_.bernoulli(loss_probability_); }

double TransmitResult::delivered_fraction() const {
  if (sent.empty()) return 0.0;
  return static_cast<double>(delivered.size()) / static_cast<double>(sent.size());
}

TransmitResult transmit(std::span<const Packet> packets, const ChannelConfig& config) {
  LossyChannel channel(config);
  TransmitResult result;
  result.sent.assign(packets.begin(), packets.end());
  result.delivered_mask.reserve(packets.size());
  for (const auto& p : packets) {
    const bool ok = channel.deliver();
    result.delivered_mask.push_back(ok);
    if (ok) result.delivered.push_back(p);
  }
  return result;
}

TransmitResult transmit(const Bitstream& stream, const ChannelConfig& config) {
  config.validate();
  const auto packets = fragment(stream, config.packet_size);
  return transmit(packets, config);
}

std::set<std::uint8_t> usable_chunks(std::span<const Packet> delivered) {
  std::map<std::uint8_t, std::pair<std::uint16_t, std::set<std::uint16_t>>> seen;
  for (const auto& p : delivered) {
    auto& entry = seen[p.chunk_id];
    entry.first = p.frag_count;
    entry.second.insert(p.frag_index);
  }
  std::set<std::uint8_t> usable;
  for (const auto& [id, entry] : seen)
    if (entry.second.size() == entry.first) usable.insert(id);
  return usable;
}

std::optional<LayerSet> decodable_path(const ModelSpec& spec,
                                       const std::set<std::uint8_t>& available) {
  const std::size_t out = spec.output_index();
  if (spec.family == Family::kFourier && !available.contains(kEncodingChunk)) return std::nullopt;
  if (!available.contains(chunk_for_layer(0)) || !available.contains(chunk_for_layer(out)))
    return std::nullopt;
  LayerSet path{0, out};
  for (std::size_t l = 1; l < out && available.contains(chunk_for_layer(l)); ++l) path.insert(l);
  return path;
}

std::optional<Frame> progressive_decode(const ParamSet& partial,
                                        const std::set<std::uint8_t>& available,
                                        const ModelSpec& spec, const CoordGrid& grid) {
  auto path = decodable_path(spec, available);
  if (!path) return std::nullopt;
  Frame frame;
  frame.image = render(partial, grid, *path);
  frame.stage = static_cast<int>(path->size()) - 1;
  frame.active = std::move(*path);
  return frame;
}

ProgressiveDecoder::ProgressiveDecoder(StreamHeader header)
    : header_(std::move(header)), model_(empty_model(header_)) {}

bool ProgressiveDecoder::accept_record(std::span<const std::uint8_t> record) {
  ChunkParse p = parse_chunk(record, header_);
  if (p.status != ChunkStatus::kOk || p.size != record.size()) {
    if (!record.empty()) rejected_.insert(record.front());
    return false;
  }
  install_chunk(model_, *p.chunk);
  available_.insert(p.chunk->id);
  rejected_.erase(p.chunk->id);
  return true;
}

std::optional<std::uint8_t> ProgressiveDecoder::accept(const Packet& packet) {
  if (available_.contains(packet.chunk_id)) return std::nullopt;
  if (packet.frag_count == 0 || packet.frag_index >= packet.frag_count) return std::nullopt;
  auto& slots = pending_[packet.chunk_id];
  if (slots.empty()) slots.resize(packet.frag_count);
  if (slots.size() != packet.frag_count) return std::nullopt;
  slots[packet.frag_index] = packet.payload;
  if (!std::all_of(slots.begin(), slots.end(), [](const auto& s) { return s.has_value(); }))
    return std::nullopt;

  std::vector<std::uint8_t> record;
  for (const auto& s : slots) record.insert(record.end(), s->begin(), s->end());
  pending_.erase(packet.chunk_id);
  if (!accept_record(record)) return std::nullopt;
  return packet.chunk_id;
}

std::optional<Frame> ProgressiveDecoder::decode(const CoordGrid& grid) const {
  return progressive_decode(model_, available_, header_.spec, grid);
}

}  // namespace spinr::stream
