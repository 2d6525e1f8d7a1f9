#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "doctest.h"
#include "spinr/errors.hpp"
#include "spinr/models.hpp"
#include "spinr/rng.hpp"
#include "spinr/stream.hpp"

using namespace spinr;
using namespace spinr::stream;

namespace {

// A model whose every parameter is exactly representable as float.
ParamSet float_model(const ModelSpec& spec, std::uint64_t seed) {
  ParamSet m = build_model(spec, seed);
  for (auto& l : m.layers) {
    l.weights = l.weights.cast<float>().cast<double>();
    l.bias = l.bias.cast<float>().cast<double>();
  }
  m.encoding = m.encoding.cast<float>().cast<double>();
  return m;
}

// Independent size count: header, then per chunk prefix + values + crc.
std::size_t expected_stream_size(const ModelSpec& spec, std::size_t value_width,
                                 bool quantized) {
  std::size_t n = 17;
  if (spec.family == Family::kFourier)
    n += 6 + 4 * 2 * static_cast<std::size_t>(spec.fourier_features) + 4;
  const std::size_t in = spec.family == Family::kFourier
                             ? 2 * static_cast<std::size_t>(spec.fourier_features)
                             : 2;
  const auto h = static_cast<std::size_t>(spec.width);
  std::vector<std::size_t> params = {h * (in + 1)};
  for (int i = 0; i < spec.hidden_layers; ++i) params.push_back(h * (h + 1));
  params.push_back(3 * (h + 1));
  for (std::size_t p : params) n += 6 + (quantized ? 8 : 0) + p * value_width + 4;
  return n;
}

}  // namespace

TEST_CASE("quant mode names") {
  CHECK(parse_quant_mode("f32") == QuantMode::kFloat32);
  CHECK(parse_quant_mode("u8") == QuantMode::kAffine8);
  CHECK(parse_quant_mode("u16") == QuantMode::kAffine16);
  CHECK(to_string(QuantMode::kAffine16) == "u16");
  CHECK_THROWS_AS(parse_quant_mode("int4"), std::invalid_argument);
}

TEST_CASE("crc32: check value") {
  const std::string s = "123456789";
  const std::vector<std::uint8_t> bytes(s.begin(), s.end());
  CHECK(crc32(bytes) == 0xCBF43926u);
  CHECK(crc32({}) == 0u);
}

TEST_CASE("header layout") {
  StreamHeader h;
  h.quant = QuantMode::kAffine8;
  h.spec = ModelSpec::fourier(300, 3, 64, 10.0);
  h.chunk_count = 6;
  const auto bytes = h.encode();
  REQUIRE(bytes.size() == kHeaderSize);
  const std::vector<std::uint8_t> expected_prefix = {'S', 'P', 'N', 'R', 1, 1, 1, 3,
                                                     300 & 0xff, 300 >> 8, 64, 0};
  CHECK(std::equal(expected_prefix.begin(), expected_prefix.end(), bytes.begin()));
  float sigma = 0;
  std::memcpy(&sigma, bytes.data() + 12, 4);
  CHECK(sigma == 10.0f);
  CHECK(bytes[16] == 6);

  const StreamHeader back = StreamHeader::decode(bytes);
  CHECK(back.spec == h.spec);
  CHECK(back.quant == h.quant);
  CHECK(back.chunk_count == 6);
}

TEST_CASE("header rejects bad input") {
  StreamHeader h;
  h.spec = ModelSpec::siren(8, 2);
  h.chunk_count = 4;
  auto bytes = h.encode();
  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(StreamHeader::decode(bad), ParseError);
  bad = bytes;
  bad[4] = 2;
  CHECK_THROWS_AS(StreamHeader::decode(bad), ParseError);
  bad = bytes;
  bad[5] = 7;
  CHECK_THROWS_AS(StreamHeader::decode(bad), ParseError);
  bad = bytes;
  bad[16] = 9;
  CHECK_THROWS_AS(StreamHeader::decode(bad), ParseError);
  CHECK_THROWS_AS(StreamHeader::decode(std::span(bytes).first(10)), ParseError);
}

TEST_CASE("send order: core chunks first") {
  StreamHeader h;
  h.spec = ModelSpec::siren(8, 4);
  CHECK(h.send_order() == std::vector<std::uint8_t>{1, 6, 2, 3, 4, 5});
  h.spec = ModelSpec::fourier(8, 2, 4);
  CHECK(h.send_order() == std::vector<std::uint8_t>{0, 1, 4, 2, 3});
}

TEST_CASE("serialize: size matches the layout count") {
  for (const ModelSpec& spec : {ModelSpec::siren(128, 4), ModelSpec::siren(5, 1),
                                ModelSpec::fourier(16, 2, 8, 3.0)}) {
    const ParamSet m = build_model(spec, 1);
    CHECK(serialize(m, spec, QuantMode::kFloat32).bytes().size() ==
          expected_stream_size(spec, 4, false));
    CHECK(serialize(m, spec, QuantMode::kAffine8).size() == expected_stream_size(spec, 1, true));
    CHECK(serialize(m, spec, QuantMode::kAffine16).size() ==
          expected_stream_size(spec, 2, true));
  }
  // 66,819 floats plus 17 header bytes and 6 chunks of 10 bytes framing.
  const ModelSpec standard = ModelSpec::siren(128, 4);
  CHECK(serialize(build_model(standard, 0), standard, QuantMode::kFloat32).size() ==
        66819 * 4 + 17 + 6 * 10);
}

TEST_CASE("serialize: f32 round trip is bit exact") {
  Rng rng(1, RngStream::kTest);
  for (int trial = 0; trial < 100; ++trial) {
    const int h = 1 + static_cast<int>(rng.index(12));
    const int n = 1 + static_cast<int>(rng.index(4));
    const ModelSpec spec = rng.bernoulli(0.5)
                               ? ModelSpec::siren(h, n, static_cast<float>(rng.uniform(1, 40)))
                               : ModelSpec::fourier(h, n, 1 + static_cast<int>(rng.index(6)),
                                                    static_cast<float>(rng.uniform(0.5, 20)));
    const ParamSet m = float_model(spec, rng.index(1000));
    const auto bytes = serialize(m, spec, QuantMode::kFloat32).bytes();
    const DecodeResult d = deserialize(bytes, DecodeMode::kStrict);
    CHECK(d.complete());
    CHECK(d.model == m);
    CHECK(d.header.spec.family == spec.family);
    CHECK(serialize(d.model, d.header.spec, QuantMode::kFloat32).bytes() == bytes);
  }
}

TEST_CASE("serialize: deterministic bytes") {
  const ModelSpec spec = ModelSpec::siren(6, 2);
  const ParamSet m = build_model(spec, 3);
  CHECK(serialize(m, spec, QuantMode::kAffine8).bytes() ==
        serialize(m, spec, QuantMode::kAffine8).bytes());
}

TEST_CASE("serialize: rejects a model that does not match its spec") {
  const ParamSet m = build_model(ModelSpec::siren(6, 2), 0);
  CHECK_THROWS_AS(serialize(m, ModelSpec::siren(6, 3), QuantMode::kFloat32),
                  std::invalid_argument);
}

TEST_CASE("quantized round trip stays within half a step") {
  for (QuantMode mode : {QuantMode::kAffine8, QuantMode::kAffine16}) {
    const double levels = mode == QuantMode::kAffine8 ? 255.0 : 65535.0;
    const ModelSpec spec = ModelSpec::fourier(24, 3, 8, 5.0);
    const ParamSet m = build_model(spec, 4);
    const ParamSet q = wire_roundtrip(m, spec, mode);
    // B always travels as f32.
    CHECK(q.encoding == m.encoding.cast<float>().cast<double>());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      const auto& a = m.layers[l];
      const double lo = std::min(a.weights.minCoeff(), a.bias.minCoeff());
      const double hi = std::max(a.weights.maxCoeff(), a.bias.maxCoeff());
      const double mag = std::max(std::abs(lo), std::abs(hi));
      const double bound = (hi - lo) / levels / 2.0 + 4.0 * mag * std::ldexp(1.0, -24);
      const double err = std::max((a.weights - q.layers[l].weights).cwiseAbs().maxCoeff(),
                                  (a.bias - q.layers[l].bias).cwiseAbs().maxCoeff());
      CHECK(err <= bound);
      CHECK(err > 0.0);
    }
  }
}

TEST_CASE("quantized: a constant chunk survives exactly") {
  const ModelSpec spec = ModelSpec::siren(3, 1);
  ParamSet m = build_model(spec, 0);
  m.layers[1].weights.setConstant(0.25);
  m.layers[1].bias.setConstant(0.25);
  const ParamSet q = wire_roundtrip(m, spec, QuantMode::kAffine8);
  CHECK(q.layers[1].weights == m.layers[1].weights);
  CHECK(q.layers[1].bias == m.layers[1].bias);
}

TEST_CASE("every single-byte corruption is caught by exactly its chunk") {
  for (const ModelSpec& spec : {ModelSpec::siren(3, 2), ModelSpec::fourier(2, 1, 2, 1.0)}) {
    for (QuantMode mode : {QuantMode::kFloat32, QuantMode::kAffine8}) {
      const Bitstream s = serialize(build_model(spec, 5), spec, mode);
      const auto bytes = s.bytes();
      std::vector<std::uint8_t> owner;
      for (const auto& c : s.chunks) owner.insert(owner.end(), c.size(), c.front());
      REQUIRE(owner.size() + kHeaderSize == bytes.size());

      for (std::size_t i = kHeaderSize; i < bytes.size(); ++i)
        for (std::uint8_t flip : {0x01, 0x80, 0xff}) {
          auto damaged = bytes;
          damaged[i] ^= flip;
          const DecodeResult d = deserialize(damaged, DecodeMode::kPartial);
          const std::uint8_t id = owner[i - kHeaderSize];
          CHECK(d.corrupt == std::set<std::uint8_t>{id});
          CHECK(d.missing.empty());
          CHECK(d.present.size() == s.chunks.size() - 1);
          CHECK_THROWS_AS(deserialize(damaged, DecodeMode::kStrict), DecodeError);
        }
    }
  }
}

TEST_CASE("partial decode of a truncated stream lists missing ids") {
  const ModelSpec spec = ModelSpec::siren(4, 3);
  const ParamSet m = float_model(spec, 6);
  const Bitstream s = serialize(m, spec, QuantMode::kFloat32);
  CHECK(deserialize(s.bytes(), DecodeMode::kPartial).missing.empty());

  Bitstream cut = s;
  cut.chunks.resize(3);  // L0, L_out, L1
  const DecodeResult d = deserialize(cut.bytes(), DecodeMode::kPartial);
  CHECK(d.present == std::set<std::uint8_t>{1, 5, 2});
  CHECK(d.missing == std::set<std::uint8_t>{3, 4});
  CHECK(d.corrupt.empty());
  CHECK(d.model.layers[0].weights == m.layers[0].weights);
  CHECK(d.model.layers[2].weights.isZero(0.0));
  CHECK_THROWS_AS(deserialize(cut.bytes(), DecodeMode::kStrict), DecodeError);

  // Cut mid-record: the partial tail is reported corrupt, not lost silently.
  auto bytes = s.bytes();
  bytes.resize(bytes.size() - 5);
  const DecodeResult t = deserialize(bytes, DecodeMode::kPartial);
  CHECK(t.corrupt == std::set<std::uint8_t>{4});
  CHECK(t.present.size() == 4);
}

TEST_CASE("chunk order does not matter") {
  const ModelSpec spec = ModelSpec::fourier(5, 3, 3, 2.0);
  const ParamSet m = float_model(spec, 7);
  const Bitstream s = serialize(m, spec, QuantMode::kFloat32);
  Bitstream shuffled = s;
  Rng rng(7, RngStream::kTest);
  std::shuffle(shuffled.chunks.begin(), shuffled.chunks.end(), rng.engine());
  std::reverse(shuffled.chunks.begin(), shuffled.chunks.end());
  const DecodeResult d = deserialize(shuffled.bytes(), DecodeMode::kStrict);
  CHECK(d.model == m);
}

TEST_CASE("truncated_to_stage keeps the stage prefix") {
  const ModelSpec spec = ModelSpec::siren(4, 4);
  const Bitstream s = serialize(build_model(spec, 0), spec, QuantMode::kFloat32);
  auto ids = [](const Bitstream& b) {
    std::vector<std::uint8_t> v;
    for (const auto& c : b.chunks) v.push_back(c.front());
    return v;
  };
  CHECK(ids(s.truncated_to_stage(1)) == std::vector<std::uint8_t>{1, 6});
  CHECK(ids(s.truncated_to_stage(3)) == std::vector<std::uint8_t>{1, 6, 2, 3});
  CHECK(ids(s.truncated_to_stage(5)) == ids(s));
  CHECK(s.truncated_to_stage(2).header.chunk_count == 3);
}

TEST_CASE("packets: encode, decode and fragmentation") {
  Packet p{4, 2, 3, {9, 8, 7}};
  const auto bytes = p.encode();
  CHECK(bytes == std::vector<std::uint8_t>{4, 2, 0, 3, 0, 9, 8, 7});
  const Packet back = Packet::decode(bytes);
  CHECK(back.chunk_id == 4);
  CHECK(back.frag_index == 2);
  CHECK(back.frag_count == 3);
  CHECK(back.payload == p.payload);
  CHECK_THROWS_AS(Packet::decode(std::vector<std::uint8_t>{1, 3, 0, 3, 0}), ParseError);
  CHECK_THROWS_AS(Packet::decode(std::vector<std::uint8_t>{1, 0}), ParseError);

  const ModelSpec spec = ModelSpec::siren(16, 2);
  const Bitstream s = serialize(build_model(spec, 0), spec, QuantMode::kFloat32);
  const auto packets = fragment(s, 100);
  std::size_t total = 0;
  for (const auto& pk : packets) {
    CHECK(pk.payload.size() <= 100);
    CHECK(pk.payload.size() > 0);
    total += pk.payload.size();
  }
  CHECK(total + kHeaderSize == s.size());
  CHECK(usable_chunks(packets).size() == s.chunks.size());
}

TEST_CASE("channel: p = 0 and p = 1 are exact") {
  const ModelSpec spec = ModelSpec::siren(32, 3);
  const Bitstream s = serialize(build_model(spec, 0), spec, QuantMode::kFloat32);
  const TransmitResult all = transmit(s, ChannelConfig{256, 0.0, 1});
  CHECK(all.delivered.size() == all.sent.size());
  CHECK(all.delivered_fraction() == 1.0);
  CHECK(usable_chunks(all.delivered).size() == s.chunks.size());
  const TransmitResult none = transmit(s, ChannelConfig{256, 1.0, 1});
  CHECK(none.delivered.empty());
  CHECK(usable_chunks(none.delivered).empty());
}

TEST_CASE("channel: seeded and binomial") {
  std::vector<Packet> packets(10000, Packet{1, 0, 1, {0}});
  const TransmitResult a = transmit(packets, ChannelConfig{1024, 0.3, 42});
  const TransmitResult b = transmit(packets, ChannelConfig{1024, 0.3, 42});
  CHECK(a.delivered_mask == b.delivered_mask);
  const TransmitResult c = transmit(packets, ChannelConfig{1024, 0.3, 43});
  CHECK_FALSE(a.delivered_mask == c.delivered_mask);
  const double sd = std::sqrt(0.3 * 0.7 / 10000.0);
  CHECK(std::abs(a.delivered_fraction() - 0.7) < 3 * sd);
  CHECK_THROWS_AS(transmit(packets, ChannelConfig{1024, 1.5, 0}), std::invalid_argument);
  CHECK_THROWS_AS(transmit(packets, ChannelConfig{0, 0.1, 0}), std::invalid_argument);
}

TEST_CASE("a chunk is usable only with all its fragments") {
  std::vector<Packet> delivered = {{1, 0, 2, {}}, {2, 0, 1, {}}, {3, 1, 2, {}}, {3, 0, 2, {}}};
  CHECK(usable_chunks(delivered) == std::set<std::uint8_t>{2, 3});
}

TEST_CASE("decodable_path: prefix rule") {
  const ModelSpec spec = ModelSpec::siren(4, 4);
  CHECK_FALSE(decodable_path(spec, {2, 3, 4, 5, 6}).has_value());
  CHECK_FALSE(decodable_path(spec, {1, 2, 3}).has_value());
  CHECK(*decodable_path(spec, {1, 6}) == LayerSet{0, 5});
  // L2 lost: decode with {L0, L1} and stop there.
  CHECK(*decodable_path(spec, {1, 2, 4, 6}) == LayerSet{0, 1, 5});
  CHECK(*decodable_path(spec, {1, 2, 3, 4, 5, 6}) == LayerSet::all(6));
  const ModelSpec f = ModelSpec::fourier(4, 1, 3);
  CHECK_FALSE(decodable_path(f, {1, 2, 3}).has_value());
  CHECK(decodable_path(f, {0, 1, 3}).has_value());
}

TEST_CASE("progressive_decode: stages and identities") {
  const ModelSpec spec = ModelSpec::siren(8, 4);
  const ParamSet m = float_model(spec, 8);
  const CoordGrid grid(6, 7);
  const DecodeResult full = deserialize(serialize(m, spec, QuantMode::kFloat32).bytes(),
                                        DecodeMode::kStrict);

  const auto all = progressive_decode(full.model, full.present, spec, grid);
  REQUIRE(all.has_value());
  CHECK(all->stage == 5);
  CHECK(all->image == render(m, grid));

  const auto core = progressive_decode(full.model, {1, 6}, spec, grid);
  REQUIRE(core.has_value());
  CHECK(core->stage == 1);
  CHECK(core->image == render(m, grid, LayerSet{0, 5}));

  const auto gap = progressive_decode(full.model, {1, 2, 4, 6}, spec, grid);
  REQUIRE(gap.has_value());
  CHECK(gap->stage == 2);
  CHECK(gap->image == render(m, grid, LayerSet{0, 1, 5}));

  CHECK_FALSE(progressive_decode(full.model, {2, 3, 6}, spec, grid).has_value());
}

TEST_CASE("ProgressiveDecoder: out-of-order packets with duplicates") {
  const ModelSpec spec = ModelSpec::fourier(8, 3, 6, 2.0);
  const ParamSet m = float_model(spec, 9);
  const Bitstream s = serialize(m, spec, QuantMode::kFloat32);
  auto packets = fragment(s, 50);
  const auto extra = packets;
  packets.insert(packets.end(), extra.begin(), extra.begin() + 5);
  Rng rng(9, RngStream::kTest);
  std::shuffle(packets.begin(), packets.end(), rng.engine());

  ProgressiveDecoder dec(s.header);
  const CoordGrid grid(5, 5);
  CHECK_FALSE(dec.decode(grid).has_value());
  std::set<std::uint8_t> completed;
  int last_stage = 0;
  for (const auto& p : packets) {
    if (auto id = dec.accept(p)) {
      CHECK(completed.insert(*id).second);
      if (auto frame = dec.decode(grid)) {
        CHECK(frame->stage >= last_stage);
        last_stage = frame->stage;
      }
    }
  }
  CHECK(completed.size() == s.chunks.size());
  CHECK(dec.model() == m);
  CHECK(dec.decode(grid)->image == render(m, grid));
}

TEST_CASE("ProgressiveDecoder: a damaged payload is rejected") {
  const ModelSpec spec = ModelSpec::siren(4, 2);
  const Bitstream s = serialize(build_model(spec, 1), spec, QuantMode::kAffine8);
  auto packets = fragment(s, 16);
  packets[0].payload[7] ^= 0x10;  // inside L0's record
  ProgressiveDecoder dec(s.header);
  for (const auto& p : packets) dec.accept(p);
  CHECK(dec.rejected() == std::set<std::uint8_t>{1});
  CHECK_FALSE(dec.available().contains(1));
  CHECK_FALSE(dec.decode(CoordGrid(2, 2)).has_value());

  // A clean copy arriving later repairs it.
  CHECK(dec.accept_record(s.chunks[0]));
  CHECK(dec.rejected().empty());
  CHECK(dec.decode(CoordGrid(2, 2))->stage == 3);
}

TEST_CASE("split_records recovers the chunk records") {
  const ModelSpec spec = ModelSpec::fourier(6, 2, 4, 2.0);
  const Bitstream s = serialize(build_model(spec, 2), spec, QuantMode::kAffine16);
  const Bitstream back = split_records(s.bytes());
  CHECK(back.chunks == s.chunks);
  CHECK(back.header.spec == s.header.spec);
  CHECK(split_records(s.truncated_to_stage(1).bytes()).chunks.size() == 3);

  auto damaged = s.bytes();
  damaged[kHeaderSize + 20] ^= 1;
  CHECK_THROWS_AS(split_records(damaged), DecodeError);
  auto short_stream = s.bytes();
  short_stream.resize(short_stream.size() - s.chunks.back().size());
  CHECK_THROWS_AS(split_records(short_stream), DecodeError);
}
