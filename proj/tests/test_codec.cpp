#include "doctest.h"

#include <algorithm>
#include <cstring>

#include "lep/analysis.hpp"
#include "lep/codec.hpp"
#include "synth.h"

using namespace lep;

namespace {

CoefficientImage skeleton_of(const CoefficientImage& img) {
  CoefficientImage s = img;
  for (auto& c : s.components) {
    c.blocks.clear();
  }
  return s;
}

// Tables tuned to the image's own trace: smallest zero-overflow depth per
// touched model, everything forced into the optimized layout.
TableSet tailored_tables(const CoefficientImage& img, uint32_t ways) {
  UnboundedStore store(registry());
  ImageTrace trace;
  trace.id = "self";
  store.arm_trace(&trace);
  encode_payload(img, store);
  for (auto& v : trace.touched) std::sort(v.begin(), v.end());

  AccessHistogram hist(registry());
  hist.add(trace);
  std::vector<ImageTrace> traces{trace};
  std::vector<uint32_t> depths(kNumModels, ways);
  for (uint16_t m = 0; m < kNumModels; ++m)
    depths[m] = min_depth(traces, {}, hist, registry(), m, ways, false);
  BuildConfig cfg;
  cfg.ways = ways;
  cfg.ma_ratio = 1e9;
  return assemble_tables(hist, registry(), depths, cfg);
}

// Single-set tables: every touched model gets depth == ways, so a busy
// image is guaranteed to overflow somewhere.
TableSet cramped_tables(const CoefficientImage& img, uint32_t ways) {
  UnboundedStore store(registry());
  ImageTrace trace;
  store.arm_trace(&trace);
  encode_payload(img, store);
  for (auto& v : trace.touched) std::sort(v.begin(), v.end());
  AccessHistogram hist(registry());
  hist.add(trace);
  std::vector<uint32_t> depths(kNumModels, ways);
  BuildConfig cfg;
  cfg.ways = ways;
  cfg.ma_ratio = 1e9;
  return assemble_tables(hist, registry(), depths, cfg);
}

}  // namespace

TEST_CASE("payload round trips through an unbounded store") {
  for (uint32_t seed : {1u, 2u, 3u, 4u}) {
    for (int ncomp : {1, 3}) {
      CoefficientImage img = testdata::make_synthetic(seed * 10 + ncomp, ncomp);
      UnboundedStore store(registry());
      EncodeOutcome out = encode_payload(img, store);
      CHECK(!out.overflowed);
      CHECK(!out.payload.empty());

      CoefficientImage dst = skeleton_of(img);
      decode_payload(out.payload, dst, store);
      CHECK(testdata::same_coefficients(img, dst));
    }
  }
}

TEST_CASE("encoding is deterministic") {
  CoefficientImage img = testdata::make_synthetic(99, 3);
  UnboundedStore store(registry());
  auto a = encode_payload(img, store).payload;
  auto b = encode_payload(img, store).payload;
  CHECK(a == b);
}

TEST_CASE("decoder replays the encoder's model accesses exactly") {
  CoefficientImage img = testdata::make_synthetic(5, 2);
  UnboundedStore store(registry());

  std::vector<std::pair<uint16_t, uint32_t>> enc_acc, dec_acc;
  std::vector<SyntaxTag> enc_tags, dec_tags;
  CodecTrace enc_trace{&enc_acc, &enc_tags};
  CodecTrace dec_trace{&dec_acc, &dec_tags};

  EncodeOutcome out = encode_payload(img, store, &enc_trace);
  CoefficientImage dst = skeleton_of(img);
  decode_payload(out.payload, dst, store, &dec_trace);

  CHECK(enc_acc == dec_acc);
  CHECK(enc_tags == dec_tags);

  // Every block announces all seven syntax elements, in a fixed order.
  REQUIRE(enc_tags.size() == img.total_blocks() * 7);
  const SyntaxTag expect[7] = {SyntaxTag::kNz7x7,   SyntaxTag::kCoef7x7,
                               SyntaxTag::kNzXEdge, SyntaxTag::kCoefXEdge,
                               SyntaxTag::kNzYEdge, SyntaxTag::kCoefYEdge,
                               SyntaxTag::kDc};
  for (size_t i = 0; i < enc_tags.size(); ++i)
    CHECK(enc_tags[i] == expect[i % 7]);
}

TEST_CASE("bounded and unbounded payloads are bit-identical without overflow") {
  CoefficientImage img = testdata::make_synthetic(123, 3);
  UnboundedStore ub(registry());
  auto reference = encode_payload(img, ub).payload;

  TableSet ts = tailored_tables(img, 32);
  BoundedStore bs(ts, registry());
  EncodeOutcome out = encode_payload(img, bs);
  CHECK(!out.overflowed);
  CHECK(bs.overflows().empty());
  CHECK(out.payload == reference);

  CoefficientImage dst = skeleton_of(img);
  decode_payload(out.payload, dst, bs);
  CHECK(testdata::same_coefficients(img, dst));
}

TEST_CASE("a cramped table set overflows and aborts the bounded encode") {
  CoefficientImage img = testdata::make_synthetic(321, 3);
  TableSet ts = cramped_tables(img, 4);
  BoundedStore bs(ts, registry());
  EncodeOutcome out = encode_payload(img, bs);
  CHECK(out.overflowed);
  REQUIRE(!bs.overflows().empty());
  const OverflowRecord& rec = bs.overflows().front();
  CHECK(rec.model < kNumModels);
  CHECK(rec.index < registry().model(rec.model).bins);

  CHECK_THROWS_AS(
      encode_to_container(img, &ts, /*allow_fallback=*/false),
      OverflowAbort);

  std::vector<OverflowRecord> log;
  std::vector<uint8_t> blob =
      encode_to_container(img, &ts, /*allow_fallback=*/true, &log, "synthetic");
  CHECK(!log.empty());
  CHECK(log.front().image == "synthetic");
  Container c = read_container(blob);
  CHECK(c.mode == ContainerMode::kUnboundedFallback);
  CoefficientImage back = decode_from_container(blob, nullptr);
  CHECK(testdata::same_coefficients(img, back));
}

TEST_CASE("bounded containers carry the table hash and round trip") {
  CoefficientImage img = testdata::make_synthetic(55, 2);
  TableSet ts = tailored_tables(img, 16);
  std::vector<uint8_t> blob = encode_to_container(img, &ts, false);

  Container c = read_container(blob);
  CHECK(c.mode == ContainerMode::kBounded);
  CHECK(c.tables_hash == ts.content_hash);
  CHECK(c.skeleton.header_blob == img.header_blob);

  CoefficientImage back = decode_from_container(blob, &ts);
  CHECK(testdata::same_coefficients(img, back));
  CHECK(back.header_blob == img.header_blob);
  CHECK(back.quant_tables.size() == img.quant_tables.size());

  // Bounded data is useless without the right tables.
  CHECK_THROWS_AS(decode_from_container(blob, nullptr), TableMismatch);
  TableSet other = tailored_tables(testdata::make_synthetic(56, 2), 16);
  REQUIRE(other.content_hash != ts.content_hash);
  CHECK_THROWS_AS(decode_from_container(blob, &other), TableMismatch);
}

TEST_CASE("container damage is detected") {
  CoefficientImage img = testdata::make_synthetic(77, 1);
  std::vector<uint8_t> blob = encode_to_container(img, nullptr, true);
  CHECK(std::memcmp(blob.data(), "LEPS", 4) == 0);

  auto flipped = blob;
  flipped[flipped.size() - 9] ^= 1;  // inside the payload
  CHECK_THROWS_AS(read_container(flipped), ChecksumMismatch);

  auto magic = blob;
  magic[2] = '?';
  CHECK_THROWS_AS(read_container(magic), MalformedStream);

  auto version = blob;
  version[4] = 0x7f;
  CHECK_THROWS_AS(read_container(version), FormatVersionMismatch);

  auto truncated = blob;
  truncated.resize(truncated.size() / 2);
  CHECK_THROWS_AS(read_container(truncated), Error);

  auto padded = blob;
  padded.push_back(0);
  CHECK_THROWS_AS(read_container(padded), MalformedStream);
}

TEST_CASE("corrupt payload bits surface as CorruptStream") {
  CoefficientImage img = testdata::make_synthetic(31, 2);
  UnboundedStore store(registry());
  auto payload = encode_payload(img, store).payload;

  // Truncating the arithmetic-coded payload must throw, not read past the
  // end or return garbage silently.
  std::vector<uint8_t> cut(payload.begin(), payload.begin() + 3);
  CoefficientImage dst = skeleton_of(img);
  CHECK_THROWS_AS(decode_payload(cut, dst, store), CorruptStream);
}
