#pragma once

// Layer-chunked model bitstream, packetization over a lossy channel, and
// progressive reconstruction from whatever chunks have arrived.
//
// Stream layout (little-endian):
//   "SPNR" | version u8 | quant_mode u8 | family u8 | n u8 | h u16 | m u16 |
//   omega0-or-sigma f32 | chunk_count u8 | chunk records...
// Chunk record:
//   chunk_id u8 | dtype u8 | rows u16 | cols u16 |
//   [scale f32 | zero f32]   (quantized dtypes only)
//   weights (row-major) | bias (absent for the encoding chunk) | crc32 u32
// The CRC (IEEE, reflected) covers every record byte before it.
// Packet:
//   chunk_id u8 | frag_index u16 | frag_count u16 | payload

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "spinr/image.hpp"
#include "spinr/models.hpp"
#include "spinr/nn.hpp"
#include "spinr/rng.hpp"

namespace spinr::stream {

enum class QuantMode : std::uint8_t { kFloat32 = 0, kAffine8 = 1, kAffine16 = 2 };

std::string_view to_string(QuantMode mode);
/// Accepts "f32", "u8", "u16".
QuantMode parse_quant_mode(std::string_view name);

inline constexpr std::array<std::uint8_t, 4> kMagic = {'S', 'P', 'N', 'R'};
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 17;
inline constexpr std::size_t kPacketHeaderSize = 5;
inline constexpr std::uint8_t kEncodingChunk = 0;

/// Chunk ids: 0 is the Fourier matrix B, layer i travels as chunk i + 1.
constexpr std::uint8_t chunk_for_layer(std::size_t layer) {
  return static_cast<std::uint8_t>(layer + 1);
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

struct StreamHeader {
  QuantMode quant = QuantMode::kFloat32;
  ModelSpec spec;
  std::uint8_t chunk_count = 0;

  std::vector<std::uint8_t> encode() const;
  /// Throws ParseError on bad magic, version, or field values.
  static StreamHeader decode(std::span<const std::uint8_t> bytes);

  /// Every chunk id a complete stream for this spec carries, in send order:
  /// B (fourier), L0, L_out, then L1..Ln.
  std::vector<std::uint8_t> send_order() const;
};

struct ChunkLayout {
  std::uint8_t id = 0;
  std::uint8_t dtype = 0;
  std::uint16_t rows = 0;
  std::uint16_t cols = 0;
  bool has_bias = true;
  std::size_t record_size = 0;
};

/// Layout a well-formed record with this id must have; nullopt for ids the
/// stream cannot contain.
std::optional<ChunkLayout> expected_layout(const StreamHeader& header, std::uint8_t id);

/// A serialized model: header plus encoded chunk records in send order.
struct Bitstream {
  StreamHeader header;
  std::vector<std::vector<std::uint8_t>> chunks;

  std::vector<std::uint8_t> bytes() const;
  std::size_t size() const;
  /// Keeps only what stage `stage` of a progressive decode needs: B, L0,
  /// L_out and L1..L_{stage-1}.
  Bitstream truncated_to_stage(int stage) const;
};

Bitstream serialize(const ParamSet& model, const ModelSpec& spec, QuantMode mode);

struct DecodedChunk {
  std::uint8_t id = 0;
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

enum class ChunkStatus { kOk, kTruncated, kBadLayout, kCrcMismatch };

struct ChunkParse {
  ChunkStatus status = ChunkStatus::kTruncated;
  std::size_t size = 0;  // record size implied by the layout, when readable
  std::optional<DecodedChunk> chunk;
};

/// Parses the record at the start of `bytes`.
ChunkParse parse_chunk(std::span<const std::uint8_t> bytes, const StreamHeader& header);

/// A zero-filled model with the header's shapes and activations.
ParamSet empty_model(const StreamHeader& header);
void install_chunk(ParamSet& model, const DecodedChunk& chunk);

enum class DecodeMode { kStrict, kPartial };

struct DecodeResult {
  StreamHeader header;
  ParamSet model;  // zeros where chunks are missing or corrupt
  std::set<std::uint8_t> present;
  std::set<std::uint8_t> missing;
  std::set<std::uint8_t> corrupt;

  bool complete() const { return missing.empty() && corrupt.empty(); }
};

/// Strict mode throws DecodeError unless every chunk verifies. Partial mode
/// returns whatever verifies; a damaged record is skipped by finding the
/// next record boundary that parses, and is reported once in `corrupt`.
DecodeResult deserialize(std::span<const std::uint8_t> bytes, DecodeMode mode);

/// Splits a complete stream back into its header and chunk records, in
/// file order. Throws ParseError on a bad header and DecodeError on any
/// record that does not verify.
Bitstream split_records(std::span<const std::uint8_t> bytes);

/// The parameters a receiver reconstructs from serialize(model, spec, mode).
ParamSet wire_roundtrip(const ParamSet& model, const ModelSpec& spec, QuantMode mode);

struct Packet {
  std::uint8_t chunk_id = 0;
  std::uint16_t frag_index = 0;
  std::uint16_t frag_count = 0;
  std::vector<std::uint8_t> payload;

  std::vector<std::uint8_t> encode() const;
  static Packet decode(std::span<const std::uint8_t> bytes);
};

/// Splits each chunk record into payload_size slices, in send order.
std::vector<Packet> fragment(const Bitstream& stream, std::size_t payload_size);

struct ChannelConfig {
  std::size_t packet_size = 1024;
  double loss_probability = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Drops each packet independently with probability p, drawing from the
/// channel substream of the configured seed.
class LossyChannel {
 public:
  explicit LossyChannel(const ChannelConfig& config);
  bool deliver();

 private:
  double loss_probability_;
  Rng rng_;
};

struct TransmitResult {
  std::vector<Packet> sent;
  std::vector<bool> delivered_mask;  // per sent packet
  std::vector<Packet> delivered;

  double delivered_fraction() const;
};

TransmitResult transmit(const Bitstream& stream, const ChannelConfig& config);
TransmitResult transmit(std::span<const Packet> packets, const ChannelConfig& config);

/// Chunk ids whose fragments all arrived.
std::set<std::uint8_t> usable_chunks(std::span<const Packet> delivered);

/// Forward path a receiver can use given the chunks it holds: L0, the longest
/// run L1..Lj of consecutively available hidden layers, and L_out. nullopt
/// when L0, L_out or (fourier) B is missing.
std::optional<LayerSet> decodable_path(const ModelSpec& spec,
                                       const std::set<std::uint8_t>& available);

struct Frame {
  Image image;
  int stage = 0;  // j + 1
  LayerSet active;
};

std::optional<Frame> progressive_decode(const ParamSet& partial,
                                        const std::set<std::uint8_t>& available,
                                        const ModelSpec& spec, const CoordGrid& grid);

/// Receiver state: collects packets in any order, installs each chunk once
/// all its fragments have arrived and its CRC verifies.
class ProgressiveDecoder {
 public:
  explicit ProgressiveDecoder(StreamHeader header);

  /// Returns the chunk id this packet completed, if any.
  std::optional<std::uint8_t> accept(const Packet& packet);
  /// Installs a whole chunk record; false if it does not verify.
  bool accept_record(std::span<const std::uint8_t> record);

  const StreamHeader& header() const { return header_; }
  const std::set<std::uint8_t>& available() const { return available_; }
  const std::set<std::uint8_t>& rejected() const { return rejected_; }
  const ParamSet& model() const { return model_; }

  std::optional<Frame> decode(const CoordGrid& grid) const;

 private:
  StreamHeader header_;
  ParamSet model_;
  std::set<std::uint8_t> available_;
  std::set<std::uint8_t> rejected_;
  std::map<std::uint8_t, std::vector<std::optional<std::vector<std::uint8_t>>>> pending_;
};

}  // namespace spinr::stream
