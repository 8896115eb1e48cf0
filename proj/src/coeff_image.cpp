#include "lep/coeff_image.hpp"

#include <fstream>

#include "lep/binio.hpp"

namespace lep {

void write_skeleton(ByteWriter& w, const CoefficientImage& img) {
  w.u8(static_cast<uint8_t>(img.components.size()));
  for (const Component& c : img.components) {
    w.u32(c.width_blocks);
    w.u32(c.height_blocks);
    w.u8(c.h_samp);
    w.u8(c.v_samp);
    w.u8(c.quant_id);
  }
  w.u8(static_cast<uint8_t>(img.quant_tables.size()));
  for (const QuantTable& q : img.quant_tables) {
    w.u8(q.id);
    for (uint16_t v : q.values) w.u16(v);
  }
  // The header blob is mostly Huffman and quantization table payload and
  // deflates to a fraction of its size, which matters on small files.
  w.u32(static_cast<uint32_t>(img.header_blob.size()));
  if (img.header_blob.empty()) {
    w.u32(0);
    return;
  }
  uLongf bound = compressBound(static_cast<uLong>(img.header_blob.size()));
  std::vector<uint8_t> packed(bound);
  if (compress2(packed.data(), &bound, img.header_blob.data(),
                static_cast<uLong>(img.header_blob.size()),
                Z_BEST_COMPRESSION) != Z_OK)
    throw Error("header blob compression failed");
  w.u32(static_cast<uint32_t>(bound));
  w.bytes(packed.data(), bound);
}

CoefficientImage read_skeleton(ByteReader& r) {
  CoefficientImage img;
  uint8_t ncomp = r.u8();
  if (ncomp < 1 || ncomp > 3)
    throw MalformedStream("component count out of range");
  for (int i = 0; i < ncomp; ++i) {
    Component c;
    c.width_blocks = r.u32();
    c.height_blocks = r.u32();
    c.h_samp = r.u8();
    c.v_samp = r.u8();
    c.quant_id = r.u8();
    if (c.width_blocks == 0 || c.height_blocks == 0)
      throw MalformedStream("empty component grid");
    img.components.push_back(std::move(c));
  }
  uint8_t nq = r.u8();
  if (nq > 4) throw MalformedStream("too many quant tables");
  for (int i = 0; i < nq; ++i) {
    QuantTable q;
    q.id = r.u8();
    for (auto& v : q.values) v = r.u16();
    img.quant_tables.push_back(q);
  }
  uint32_t blob_len = r.u32();
  uint32_t packed_len = r.u32();
  std::vector<uint8_t> packed = r.bytes(packed_len);
  if (blob_len == 0) {
    if (packed_len != 0) throw MalformedStream("empty blob with packed data");
    return img;
  }
  img.header_blob.resize(blob_len);
  uLongf got = blob_len;
  if (uncompress(img.header_blob.data(), &got, packed.data(), packed_len) !=
          Z_OK ||
      got != blob_len)
    throw MalformedStream("header blob does not inflate");
  return img;
}

std::vector<uint8_t> dump_coefficients(const CoefficientImage& img) {
  if (img.components.empty())
    throw InvalidImage("image has no components");
  ByteWriter payload;
  write_skeleton(payload, img);
  for (const Component& c : img.components) {
    if (c.blocks.size() !=
        static_cast<size_t>(c.width_blocks) * c.height_blocks)
      throw InvalidImage("block count does not match grid");
    for (const auto& b : c.blocks)
      for (int16_t v : b) payload.i16(v);
  }

  ByteWriter out;
  out.bytes("LPCF", 4);
  out.u16(kCoeffDumpVersion);
  out.bytes(payload.data().data(), payload.size());
  out.u32(crc32_of(payload.data()));
  return out.take();
}

CoefficientImage load_coefficients(std::span<const uint8_t> data) {
  ByteReader r(data);
  auto magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "LPCF")
    throw MalformedStream("not a coefficient dump");
  if (r.u16() != kCoeffDumpVersion)
    throw FormatVersionMismatch("unsupported coefficient dump version");
  const uint8_t* payload_begin = r.cursor();

  CoefficientImage img = read_skeleton(r);
  for (Component& c : img.components) {
    size_t n = static_cast<size_t>(c.width_blocks) * c.height_blocks;
    c.blocks.resize(n);
    for (auto& b : c.blocks)
      for (auto& v : b) v = r.i16();
  }
  const uint8_t* payload_end = r.cursor();
  uint32_t stored = r.u32();
  if (r.remaining() != 0)
    throw MalformedStream("trailing bytes in coefficient dump");
  if (stored != crc32_of(payload_begin,
                         static_cast<size_t>(payload_end - payload_begin)))
    throw ChecksumMismatch("coefficient dump checksum mismatch");
  return img;
}

void write_file(const std::filesystem::path& p, std::span<const uint8_t> data) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open " + p.string() + " for writing");
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size()));
  if (!f.flush()) throw Error("failed writing " + p.string());
}

std::vector<uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary | std::ios::ate);
  if (!f) throw Error("cannot open " + p.string());
  std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<uint8_t> data(static_cast<size_t>(size));
  if (size && !f.read(reinterpret_cast<char*>(data.data()), size))
    throw Error("failed reading " + p.string());
  return data;
}

}  // namespace lep
