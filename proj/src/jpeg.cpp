#include "lep/jpeg.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

#include "lep/context.hpp"
#include "lep/errors.hpp"

namespace lep {
namespace {

constexpr uint8_t kMarkerSOI = 0xd8;
constexpr uint8_t kMarkerEOI = 0xd9;
constexpr uint8_t kMarkerSOS = 0xda;
constexpr uint8_t kMarkerDQT = 0xdb;
constexpr uint8_t kMarkerDNL = 0xdc;
constexpr uint8_t kMarkerDRI = 0xdd;
constexpr uint8_t kMarkerDHT = 0xc4;
constexpr uint8_t kMarkerDAC = 0xcc;
constexpr uint8_t kMarkerCOM = 0xfe;
constexpr uint8_t kMarkerSOF0 = 0xc0;
constexpr uint8_t kMarkerRST0 = 0xd0;

bool is_app(uint8_t m) { return m >= 0xe0 && m <= 0xef; }
bool is_rst(uint8_t m) { return m >= 0xd0 && m <= 0xd7; }
bool is_sof(uint8_t m) {
  return m >= 0xc0 && m <= 0xcf && m != kMarkerDHT && m != 0xc8 &&
         m != kMarkerDAC;
}

// Canonical Huffman table, usable in both directions.
struct HuffTable {
  bool present = false;
  std::array<uint8_t, 17> counts{};  // counts[len], len 1..16
  std::array<uint8_t, 256> symbols{};
  int nsym = 0;

  // decoder side (T.81 F.2.2.3)
  std::array<int32_t, 17> mincode{};
  std::array<int32_t, 17> maxcode{};
  std::array<int32_t, 17> valptr{};

  // encoder side
  std::array<uint16_t, 256> ecode{};
  std::array<uint8_t, 256> elen{};

  void build() {
    int32_t code = 0;
    int k = 0;
    elen.fill(0);
    for (int len = 1; len <= 16; ++len) {
      if (counts[len]) {
        valptr[len] = k;
        mincode[len] = code;
        for (int i = 0; i < counts[len]; ++i) {
          uint8_t sym = symbols[k];
          ecode[sym] = static_cast<uint16_t>(code);
          elen[sym] = static_cast<uint8_t>(len);
          ++code;
          ++k;
        }
        maxcode[len] = code - 1;
      } else {
        maxcode[len] = -1;
      }
      code <<= 1;
      if (code > (1 << (len + 1)))
        throw MalformedStream("overfull huffman table");
    }
    present = true;
  }
};

struct FrameComp {
  uint8_t id = 0;
  uint8_t h = 1, v = 1;
  uint8_t tq = 0;
  uint32_t wb = 0, hb = 0;  // block grid, MCU padded when interleaved
};

struct ScanComp {
  int comp = 0;  // frame component index
  uint8_t td = 0, ta = 0;
};

struct Header {
  uint16_t width = 0, height = 0;
  int ncomp = 0;
  std::array<FrameComp, 3> comps{};
  int hmax = 1, vmax = 1;
  uint32_t mcu_cols = 0, mcu_rows = 0;

  std::array<HuffTable, 4> dc{};
  std::array<HuffTable, 4> ac{};
  std::array<QuantTable, 4> quant{};
  std::array<bool, 4> quant_present{};
  std::vector<uint8_t> quant_order;  // ids in order of first appearance

  int ns = 0;
  std::array<ScanComp, 3> scan{};
  uint16_t restart_interval = 0;
  std::vector<size_t> dri_value_offsets;  // offsets of DRI interval fields
  size_t sos_end = 0;                     // end of the SOS header segment
};

class SegReader {
 public:
  SegReader(const uint8_t* p, size_t n) : p_(p), n_(n) {}
  uint8_t u8() {
    if (pos_ >= n_) throw MalformedStream("truncated segment data");
    return p_[pos_++];
  }
  uint16_t u16be() {
    uint16_t hi = u8();
    return static_cast<uint16_t>((hi << 8) | u8());
  }
  size_t pos() const { return pos_; }
  void seek(size_t pos) { pos_ = pos; }
  size_t size() const { return n_; }

 private:
  const uint8_t* p_;
  size_t n_;
  size_t pos_ = 0;
};

Header parse_header(std::span<const uint8_t> data) {
  SegReader r(data.data(), data.size());
  if (r.u8() != 0xff || r.u8() != kMarkerSOI)
    throw MalformedStream("missing SOI");

  Header hdr;
  bool have_sof = false;
  for (;;) {
    uint8_t b = r.u8();
    if (b != 0xff) throw MalformedStream("expected marker");
    uint8_t marker = r.u8();
    while (marker == 0xff) marker = r.u8();  // fill bytes

    if (marker == kMarkerSOS) {
      size_t seg_start = r.pos();
      uint16_t len = r.u16be();
      if (len < 2) throw MalformedStream("bad SOS length");
      hdr.ns = r.u8();
      if (hdr.ns < 1 || hdr.ns > 4) throw MalformedStream("bad scan count");
      if (!have_sof) throw MalformedStream("SOS before SOF");
      if (hdr.ns != hdr.ncomp)
        throw UnsupportedFrame("only single-scan images are supported");
      for (int i = 0; i < hdr.ns; ++i) {
        uint8_t cs = r.u8();
        uint8_t tt = r.u8();
        int ci = -1;
        for (int c = 0; c < hdr.ncomp; ++c)
          if (hdr.comps[c].id == cs) ci = c;
        if (ci < 0) throw MalformedStream("scan references unknown component");
        hdr.scan[i] = {ci, static_cast<uint8_t>(tt >> 4),
                       static_cast<uint8_t>(tt & 0x0f)};
        if (hdr.scan[i].td > 3 || hdr.scan[i].ta > 3)
          throw MalformedStream("bad huffman table selector");
      }
      uint8_t ss = r.u8(), se = r.u8(), a = r.u8();
      if (ss != 0 || se != 63 || a != 0)
        throw UnsupportedFrame("non-sequential scan parameters");
      if (r.pos() != seg_start + len)
        throw MalformedStream("bad SOS segment length");
      hdr.sos_end = r.pos();
      break;
    }

    if (marker == kMarkerEOI) throw MalformedStream("no scan data");
    if (is_rst(marker) || marker == 0x01)
      throw MalformedStream("stray restart marker");

    size_t seg_start = r.pos();
    uint16_t len = r.u16be();
    if (len < 2) throw MalformedStream("bad segment length");
    size_t seg_end = seg_start + len;
    if (seg_end > r.size()) throw MalformedStream("segment overruns file");

    if (is_sof(marker)) {
      if (marker != kMarkerSOF0)
        throw UnsupportedFrame("only baseline sequential (SOF0) is supported");
      if (have_sof) throw MalformedStream("duplicate frame header");
      have_sof = true;
      uint8_t prec = r.u8();
      if (prec != 8) throw UnsupportedFrame("only 8-bit precision supported");
      hdr.height = r.u16be();
      hdr.width = r.u16be();
      if (hdr.width == 0 || hdr.height == 0)
        throw MalformedStream("empty frame dimensions");
      hdr.ncomp = r.u8();
      if (hdr.ncomp < 1 || hdr.ncomp > 4)
        throw MalformedStream("bad component count");
      if (hdr.ncomp == 4)
        throw UnsupportedFrame("four-component images are not supported");
      for (int i = 0; i < hdr.ncomp; ++i) {
        FrameComp& fc = hdr.comps[i];
        fc.id = r.u8();
        uint8_t hv = r.u8();
        fc.h = hv >> 4;
        fc.v = hv & 0x0f;
        fc.tq = r.u8();
        if (fc.h < 1 || fc.h > 4 || fc.v < 1 || fc.v > 4 || fc.tq > 3)
          throw MalformedStream("bad component parameters");
        for (int j = 0; j < i; ++j)
          if (hdr.comps[j].id == fc.id)
            throw MalformedStream("duplicate component id");
        hdr.hmax = std::max<int>(hdr.hmax, fc.h);
        hdr.vmax = std::max<int>(hdr.vmax, fc.v);
      }
      hdr.mcu_cols = (hdr.width + 8u * hdr.hmax - 1) / (8u * hdr.hmax);
      hdr.mcu_rows = (hdr.height + 8u * hdr.vmax - 1) / (8u * hdr.vmax);
      for (int i = 0; i < hdr.ncomp; ++i) {
        FrameComp& fc = hdr.comps[i];
        if (hdr.ncomp == 1) {
          // Non-interleaved single-component scan: one block per MCU, no
          // padding to the sampling grid.
          fc.wb = (hdr.width + 7) / 8;
          fc.hb = (hdr.height + 7) / 8;
        } else {
          fc.wb = hdr.mcu_cols * fc.h;
          fc.hb = hdr.mcu_rows * fc.v;
        }
      }
    } else if (marker == kMarkerDQT) {
      while (r.pos() < seg_end) {
        uint8_t pq_tq = r.u8();
        uint8_t pq = pq_tq >> 4, tq = pq_tq & 0x0f;
        if (pq > 1 || tq > 3) throw MalformedStream("bad DQT header");
        QuantTable& q = hdr.quant[tq];
        q.id = tq;
        for (int i = 0; i < 64; ++i)
          q.values[i] = pq ? r.u16be() : r.u8();
        if (!hdr.quant_present[tq]) hdr.quant_order.push_back(tq);
        hdr.quant_present[tq] = true;
      }
      if (r.pos() != seg_end) throw MalformedStream("bad DQT length");
    } else if (marker == kMarkerDHT) {
      while (r.pos() < seg_end) {
        uint8_t tc_th = r.u8();
        uint8_t tc = tc_th >> 4, th = tc_th & 0x0f;
        if (tc > 1 || th > 3) throw MalformedStream("bad DHT header");
        HuffTable& t = tc ? hdr.ac[th] : hdr.dc[th];
        int total = 0;
        for (int len = 1; len <= 16; ++len) {
          t.counts[len] = r.u8();
          total += t.counts[len];
        }
        if (total > 256) throw MalformedStream("bad DHT symbol count");
        for (int i = 0; i < total; ++i) t.symbols[i] = r.u8();
        t.nsym = total;
        t.build();
      }
      if (r.pos() != seg_end) throw MalformedStream("bad DHT length");
    } else if (marker == kMarkerDRI) {
      if (len != 4) throw MalformedStream("bad DRI length");
      hdr.dri_value_offsets.push_back(r.pos());
      hdr.restart_interval = r.u16be();
    } else if (marker == kMarkerDAC) {
      throw UnsupportedFrame("arithmetic-coded images are not supported");
    } else if (is_app(marker) || marker == kMarkerCOM) {
      r.seek(seg_end);
    } else if (marker == kMarkerDNL) {
      throw MalformedStream("unexpected DNL segment");
    } else {
      throw MalformedStream("unexpected marker in header");
    }
    r.seek(seg_end);
  }

  for (int i = 0; i < hdr.ns; ++i) {
    const ScanComp& sc = hdr.scan[i];
    if (!hdr.dc[sc.td].present || !hdr.ac[sc.ta].present)
      throw MalformedStream("scan references missing huffman table");
    if (!hdr.quant_present[hdr.comps[sc.comp].tq])
      throw MalformedStream("component references missing quant table");
  }
  return hdr;
}

// Entropy-coded segment reader: MSB-first bits, 0xff00 unstuffing, restart
// markers consumed only at interval boundaries.
class BitReader {
 public:
  BitReader(const uint8_t* p, const uint8_t* end) : p_(p), end_(end) {}

  int bit() {
    if (cnt_ == 0) fill();
    --cnt_;
    return (cur_ >> cnt_) & 1;
  }

  int receive(int n) {
    int v = 0;
    for (int i = 0; i < n; ++i) v = (v << 1) | bit();
    return v;
  }

  void restart(int expected) {
    cnt_ = 0;  // discard padding bits
    if (end_ - p_ < 2 || p_[0] != 0xff)
      throw MalformedStream("missing restart marker");
    uint8_t m = p_[1];
    if (m != kMarkerRST0 + expected)
      throw MalformedStream("restart marker out of sequence");
    p_ += 2;
  }

  // Align to the next byte; entropy data is finished.
  const uint8_t* finish() {
    cnt_ = 0;
    return p_;
  }

 private:
  void fill() {
    if (p_ == end_) throw MalformedStream("truncated entropy data");
    uint8_t b = *p_++;
    if (b == 0xff) {
      if (p_ == end_) throw MalformedStream("truncated entropy data");
      if (*p_ != 0x00)
        throw MalformedStream("marker inside entropy-coded block");
      ++p_;
    }
    cur_ = b;
    cnt_ = 8;
  }

  const uint8_t* p_;
  const uint8_t* end_;
  uint8_t cur_ = 0;
  int cnt_ = 0;
};

int decode_symbol(BitReader& br, const HuffTable& t) {
  int32_t code = br.bit();
  int len = 1;
  while (code > t.maxcode[len]) {
    code = (code << 1) | br.bit();
    if (++len > 16) throw MalformedStream("invalid huffman code");
  }
  return t.symbols[t.valptr[len] + (code - t.mincode[len])];
}

int extend(int v, int s) {
  return v < (1 << (s - 1)) ? v - (1 << s) + 1 : v;
}

void decode_block(BitReader& br, const HuffTable& dc, const HuffTable& ac,
                  int32_t& pred, std::array<int16_t, 64>& block) {
  block.fill(0);
  int t = decode_symbol(br, dc);
  if (t > 11) throw MalformedStream("DC category out of range");
  int32_t diff = t ? extend(br.receive(t), t) : 0;
  pred += diff;
  if (pred < -kCodedMaxMagnitude || pred > kCodedMaxMagnitude)
    throw MalformedStream("DC value out of range");
  block[0] = static_cast<int16_t>(pred);

  int k = 1;
  while (k <= 63) {
    int rs = decode_symbol(br, ac);
    int run = rs >> 4, size = rs & 0x0f;
    if (size == 0) {
      if (run == 15) {  // ZRL
        k += 16;
        continue;
      }
      break;  // EOB
    }
    if (size > 10) throw MalformedStream("AC category out of range");
    k += run;
    if (k > 63) throw MalformedStream("coefficient index overflow");
    block[kZigzagToRaster[k]] = static_cast<int16_t>(
        extend(br.receive(size), size));
    ++k;
  }
}

class BitWriter {
 public:
  explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}

  void put(uint32_t bits, int n) {
    for (int i = n - 1; i >= 0; --i) put_bit((bits >> i) & 1);
  }

  void pad_with_ones() {
    while (cnt_ != 0) put_bit(1);
  }

 private:
  void put_bit(uint32_t b) {
    acc_ = (acc_ << 1) | b;
    if (++cnt_ == 8) {
      out_.push_back(static_cast<uint8_t>(acc_));
      if (acc_ == 0xff) out_.push_back(0x00);  // stuffing
      acc_ = 0;
      cnt_ = 0;
    }
  }

  std::vector<uint8_t>& out_;
  uint32_t acc_ = 0;
  int cnt_ = 0;
};

void encode_symbol(BitWriter& bw, const HuffTable& t, int sym) {
  if (!t.elen[sym])
    throw MalformedStream("huffman table lacks a symbol needed for rebuild");
  bw.put(t.ecode[sym], t.elen[sym]);
}

void encode_block(BitWriter& bw, const HuffTable& dc, const HuffTable& ac,
                  int32_t& pred, const std::array<int16_t, 64>& block) {
  int32_t diff = block[0] - pred;
  pred = block[0];
  int t = bit_length(static_cast<uint32_t>(std::abs(diff)));
  if (t > 11) throw InvalidImage("DC difference exceeds baseline range");
  encode_symbol(bw, dc, t);
  if (t) bw.put(static_cast<uint32_t>(diff < 0 ? diff + (1 << t) - 1 : diff), t);

  int last_nz = 0;
  for (int k = 63; k >= 1; --k)
    if (block[kZigzagToRaster[k]] != 0) {
      last_nz = k;
      break;
    }
  int run = 0;
  for (int k = 1; k <= last_nz; ++k) {
    int v = block[kZigzagToRaster[k]];
    if (v == 0) {
      ++run;
      continue;
    }
    while (run >= 16) {
      encode_symbol(bw, ac, 0xf0);  // ZRL
      run -= 16;
    }
    int s = bit_length(static_cast<uint32_t>(std::abs(v)));
    if (s > 10) throw InvalidImage("AC coefficient exceeds baseline range");
    encode_symbol(bw, ac, (run << 4) | s);
    bw.put(static_cast<uint32_t>(v < 0 ? v + (1 << s) - 1 : v), s);
    run = 0;
  }
  if (last_nz != 63) encode_symbol(bw, ac, 0x00);  // EOB
}

}  // namespace

CoefficientImage parse_jpeg(std::span<const uint8_t> data) {
  Header hdr = parse_header(data);

  CoefficientImage img;
  for (int i = 0; i < hdr.ncomp; ++i) {
    Component c;
    c.width_blocks = hdr.comps[i].wb;
    c.height_blocks = hdr.comps[i].hb;
    c.h_samp = hdr.comps[i].h;
    c.v_samp = hdr.comps[i].v;
    c.quant_id = hdr.comps[i].tq;
    c.blocks.resize(static_cast<size_t>(c.width_blocks) * c.height_blocks);
    img.components.push_back(std::move(c));
  }
  for (uint8_t id : hdr.quant_order) img.quant_tables.push_back(hdr.quant[id]);
  img.header_blob.assign(data.begin(), data.begin() + hdr.sos_end);

  BitReader br(data.data() + hdr.sos_end, data.data() + data.size());
  std::array<int32_t, 3> pred{};
  uint64_t mcu_count = 0;
  int rst_index = 0;

  auto maybe_restart = [&]() {
    if (hdr.restart_interval && mcu_count &&
        mcu_count % hdr.restart_interval == 0) {
      br.restart(rst_index);
      rst_index = (rst_index + 1) & 7;
      pred.fill(0);
    }
  };

  if (hdr.ncomp == 1) {
    Component& c = img.components[0];
    const ScanComp& sc = hdr.scan[0];
    for (uint32_t by = 0; by < c.height_blocks; ++by)
      for (uint32_t bx = 0; bx < c.width_blocks; ++bx) {
        maybe_restart();
        decode_block(br, hdr.dc[sc.td], hdr.ac[sc.ta], pred[0],
                     c.block(bx, by));
        ++mcu_count;
      }
  } else {
    for (uint32_t my = 0; my < hdr.mcu_rows; ++my)
      for (uint32_t mx = 0; mx < hdr.mcu_cols; ++mx) {
        maybe_restart();
        for (int i = 0; i < hdr.ncomp; ++i) {
          Component& c = img.components[i];
          const ScanComp& sc = hdr.scan[i];
          for (int v = 0; v < c.v_samp; ++v)
            for (int h = 0; h < c.h_samp; ++h)
              decode_block(br, hdr.dc[sc.td], hdr.ac[sc.ta], pred[i],
                           c.block(mx * c.h_samp + h, my * c.v_samp + v));
        }
        ++mcu_count;
      }
  }

  // Entropy data must be followed by EOI (fill bytes allowed).
  const uint8_t* p = br.finish();
  const uint8_t* end = data.data() + data.size();
  if (end - p < 2 || p[0] != 0xff) throw MalformedStream("missing EOI");
  ++p;
  while (p < end && *p == 0xff) ++p;
  if (p == end || *p != kMarkerEOI) throw MalformedStream("missing EOI");
  return img;
}

std::vector<uint8_t> rebuild_jpeg(const CoefficientImage& img) {
  if (img.header_blob.empty())
    throw MissingHeaderBlob("image carries no header blob");
  Header hdr = parse_header(img.header_blob);

  if (static_cast<size_t>(hdr.ncomp) != img.components.size())
    throw InvalidImage("component count does not match header blob");
  for (int i = 0; i < hdr.ncomp; ++i) {
    const Component& c = img.components[i];
    if (c.width_blocks != hdr.comps[i].wb || c.height_blocks != hdr.comps[i].hb ||
        c.h_samp != hdr.comps[i].h || c.v_samp != hdr.comps[i].v)
      throw InvalidImage("component geometry does not match header blob");
    if (c.blocks.size() != static_cast<size_t>(c.width_blocks) * c.height_blocks)
      throw InvalidImage("block count does not match grid");
  }

  std::vector<uint8_t> out(img.header_blob.begin(), img.header_blob.end());
  // The scan below carries no restart markers, so any DRI interval in the
  // copied header must be neutralized to keep the stream conforming.
  for (size_t off : hdr.dri_value_offsets) {
    out[off] = 0;
    out[off + 1] = 0;
  }

  BitWriter bw(out);
  std::array<int32_t, 3> pred{};
  if (hdr.ncomp == 1) {
    const Component& c = img.components[0];
    const ScanComp& sc = hdr.scan[0];
    for (uint32_t by = 0; by < c.height_blocks; ++by)
      for (uint32_t bx = 0; bx < c.width_blocks; ++bx)
        encode_block(bw, hdr.dc[sc.td], hdr.ac[sc.ta], pred[0],
                     c.block(bx, by));
  } else {
    for (uint32_t my = 0; my < hdr.mcu_rows; ++my)
      for (uint32_t mx = 0; mx < hdr.mcu_cols; ++mx)
        for (int i = 0; i < hdr.ncomp; ++i) {
          const Component& c = img.components[i];
          const ScanComp& sc = hdr.scan[i];
          for (int v = 0; v < c.v_samp; ++v)
            for (int h = 0; h < c.h_samp; ++h)
              encode_block(bw, hdr.dc[sc.td], hdr.ac[sc.ta], pred[i],
                           c.block(mx * c.h_samp + h, my * c.v_samp + v));
        }
  }
  bw.pad_with_ones();
  out.push_back(0xff);
  out.push_back(kMarkerEOI);
  return out;
}

}  // namespace lep
