#include "lep/codec.hpp"

#include <algorithm>
#include <cstdlib>

#include "lep/arith.hpp"
#include "lep/binio.hpp"
#include "lep/context.hpp"
#include "lep/errors.hpp"
#include "lep/registry.hpp"

namespace lep {
namespace {

// Internal unwind signal for a bounded encode hitting a full set. Never
// escapes encode_payload.
struct OverflowSignal {};

uint32_t clamp_u32(uint32_t v, uint32_t hi) { return v < hi ? v : hi; }

// Encoder and decoder share one walk; kEnc selects the direction at the leaf
// bit operations so the context derivation cannot drift between the two.
template <bool kEnc, class Store, class ImgT>
class Coder {
 public:
  Coder(ImgT& img, Store& store, RangeEncoder* enc, RangeDecoder* dec,
        const CodecTrace* trace)
      : img_(img), store_(store), enc_(enc), dec_(dec), trace_(trace),
        reg_(registry()) {}

  void run() {
    for (size_t ci = 0; ci < img_.components.size(); ++ci) {
      auto& comp = img_.components[ci];
      flag_c_ = ci == 0 ? 0 : 1;
      nz_grid_.assign(
          static_cast<size_t>(comp.width_blocks) * comp.height_blocks, {});
      for (uint32_t by = 0; by < comp.height_blocks; ++by)
        for (uint32_t bx = 0; bx < comp.width_blocks; ++bx)
          code_block(comp, bx, by);
    }
  }

 private:
  unsigned code_bit(unsigned bit, uint16_t model, uint32_t index) {
    if (trace_ && trace_->accesses) trace_->accesses->emplace_back(model, index);
    BinState* b = store_.touch(model, index);
    if (!b) {
      if constexpr (kEnc)
        throw OverflowSignal{};
      else
        throw OverflowAbort("probability store overflowed during decode");
    }
    uint16_t p0 = b->p0_q16();
    if constexpr (kEnc)
      enc_->encode(bit, p0);
    else
      bit = dec_->decode(p0);
    b->update(bit);
    return bit;
  }

  uint32_t cx(uint16_t model, std::initializer_list<uint32_t> vals) const {
    const ModelInfo& m = reg_.model(model);
    return flatten(std::span<const uint32_t>(vals.begin(), vals.size()),
                   std::span<const Field>(m.fields.data(), m.fields.size()));
  }

  void tag(SyntaxTag t) {
    if (trace_ && trace_->syntax) trace_->syntax->push_back(t);
  }

  // Unary-coded exponent, one model per bit position; the context index is
  // shared across the family. Returns the coded exponent.
  int code_exponent(uint16_t family_base, int e, uint32_t index) {
    int ones = 0;
    for (int u = 0; u < kNumExponentBits; ++u) {
      unsigned want = kEnc && u < e ? 1u : 0u;
      unsigned bit = code_bit(want, model_for_exponent_bit(family_base, u),
                              index);
      if (!bit) break;
      if (++ones == kNumExponentBits) break;  // terminator implied at the cap
    }
    return kEnc ? e : ones;
  }

  // Sign plus magnitude residual for a value with exponent e > 0. The bit at
  // residual position j is coded against model_for(j). Returns the value.
  template <class ModelFor, class IndexFor>
  int32_t code_signed_tail(int32_t v, int e, uint32_t sign_index,
                           ModelFor&& model_for, IndexFor&& index_for) {
    unsigned neg = code_bit(kEnc && v < 0 ? 1u : 0u, kSign, sign_index);
    uint32_t mag = kEnc ? static_cast<uint32_t>(std::abs(v)) : 1u;
    uint32_t prefix = 0;
    for (int j = 0; j < e - 1; ++j) {
      unsigned want = kEnc ? (mag >> (e - 2 - j)) & 1u : 0u;
      unsigned bit = code_bit(want, model_for(j), index_for(j, prefix));
      prefix = (prefix << 1) | bit;
      if constexpr (!kEnc) mag = (mag << 1) | bit;
    }
    if constexpr (kEnc) return v;
    return neg ? -static_cast<int32_t>(mag) : static_cast<int32_t>(mag);
  }

  // MSB-first nonzero count, one model per bit position, previously coded
  // bits as context.
  int code_nz(uint16_t base, int nbits, int value, uint32_t ctx) {
    uint32_t acc = 0;
    for (int k = nbits - 1; k >= 0; --k) {
      uint16_t model = static_cast<uint16_t>(base + k);
      uint32_t prefix_range = reg_.model(model).fields.back().range;
      uint32_t idx = cx(model, {flag_c_, ctx, clamp_u32(acc, prefix_range - 1)});
      unsigned bit = code_bit(kEnc ? (value >> k) & 1 : 0u, model, idx);
      acc = (acc << 1) | bit;
    }
    return kEnc ? value : static_cast<int>(acc);
  }

  template <class Comp>
  void code_block(Comp& comp, uint32_t bx, uint32_t by) {
    auto& blk = comp.block(bx, by);
    const std::array<int16_t, 64>* left = bx ? &comp.block(bx - 1, by) : nullptr;
    const std::array<int16_t, 64>* above =
        by ? &comp.block(bx, by - 1) : nullptr;
    const NonzeroCounts lnz =
        left ? nz_grid_[static_cast<size_t>(by) * comp.width_blocks + bx - 1]
             : NonzeroCounts{};
    const NonzeroCounts anz =
        above
            ? nz_grid_[static_cast<size_t>(by - 1) * comp.width_blocks + bx]
            : NonzeroCounts{};
    NonzeroCounts nz;
    if constexpr (kEnc) nz = count_nonzeros(blk);

    auto neighbor_mag = [&](int cell) {
      uint32_t l = left ? static_cast<uint32_t>(std::abs((*left)[cell])) : 0;
      uint32_t a = above ? static_cast<uint32_t>(std::abs((*above)[cell])) : 0;
      return neighbor_mean(l, a);
    };

    // Interior nonzero count, 6 bits.
    tag(SyntaxTag::kNz7x7);
    uint32_t nn7 = neighbor_mean(static_cast<uint32_t>(lnz.n7x7),
                                 static_cast<uint32_t>(anz.n7x7)) / 5;
    int n7 = code_nz(kNz7x7Base, 6, nz.n7x7, nn7);
    if constexpr (!kEnc) {
      if (n7 > 49) throw CorruptStream("interior nonzero count exceeds 49");
      nz.n7x7 = n7;
    }

    // Interior coefficients, zigzag over the 7x7 subblock, coded until the
    // announced nonzeros are exhausted.
    tag(SyntaxTag::kCoef7x7);
    int remaining = n7;
    for (int c = 0; c < 49 && remaining > 0; ++c) {
      int cell = k7x7Order[c];
      uint32_t mean = neighbor_mag(cell);
      uint32_t prior = clamp_u32(bit_length(mean), 10);
      uint32_t nzl = clamp_u32(static_cast<uint32_t>(remaining), 9);
      uint32_t eidx = cx(kExp7x7Base,
                         {flag_c_, nzl, static_cast<uint32_t>(c), prior});
      int16_t v = kEnc ? blk[cell] : 0;
      int e = code_exponent(
          kExp7x7Base, kEnc ? bit_length(static_cast<uint32_t>(std::abs(v))) : 0,
          eidx);
      if (e > 0) {
        uint32_t zz = kRasterToZigzag[cell] - 1u;
        uint32_t ridx = cx(kRes7x7Base, {flag_c_, zz, nzl});
        int32_t got = code_signed_tail(
            v, e, cx(kSign, {flag_c_, 0, prior}),
            [&](int j) { return static_cast<uint16_t>(kRes7x7Base + j); },
            [&](int, uint32_t) { return ridx; });
        if constexpr (!kEnc) blk[cell] = static_cast<int16_t>(got);
        --remaining;
      }
    }

    code_edge(blk, /*vertical=*/false, nz,
              clamp_u32(static_cast<uint32_t>(anz.x_edge), 7), neighbor_mag);
    code_edge(blk, /*vertical=*/true, nz,
              clamp_u32(static_cast<uint32_t>(lnz.y_edge), 7), neighbor_mag);

    // DC, coded last as a wrapped prediction residual.
    tag(SyntaxTag::kDc);
    std::optional<int> ldc, adc;
    if (left) ldc = (*left)[0];
    if (above) adc = (*above)[0];
    int pred = predict_dc(ldc, adc);
    uint32_t mean = neighbor_mag(0);
    uint32_t nz_total_ctx = clamp_u32(
        bit_length(static_cast<uint32_t>(nz.n7x7 + nz.x_edge + nz.y_edge)), 5);
    uint32_t eidx = cx(kExpDcBase, {flag_c_, nz_total_ctx,
                                    clamp_u32(bit_length(mean), 16)});
    int32_t r = kEnc ? wrap_dc_residual(blk[0] - pred) : 0;
    int e = code_exponent(
        kExpDcBase, kEnc ? bit_length(static_cast<uint32_t>(std::abs(r))) : 0,
        eidx);
    if (e > 0) {
      uint32_t len_ctx = clamp_u32(static_cast<uint32_t>(e - 2), 5);
      uint32_t ridx = cx(kResDcBase, {flag_c_, len_ctx});
      int32_t got = code_signed_tail(
          r, e, cx(kSign, {flag_c_, 2, clamp_u32(bit_length(mean), 10)}),
          [&](int j) { return static_cast<uint16_t>(kResDcBase + j); },
          [&](int, uint32_t) { return ridx; });
      if constexpr (!kEnc) r = got;
    }
    if constexpr (!kEnc) blk[0] = static_cast<int16_t>(unwrap_dc(pred, r));

    nz_grid_[static_cast<size_t>(by) * comp.width_blocks + bx] = nz;
  }

  // One edge strip: nonzero count then coefficients. Threshold bits of long
  // residuals go through the shared res_thres ladder; the last three bits
  // stay with the per-orientation edge models.
  template <class Block, class NeighborMag>
  void code_edge(Block& blk, bool vertical, NonzeroCounts& nz,
                 uint32_t neighbor_edge_nz, NeighborMag&& neighbor_mag) {
    tag(vertical ? SyntaxTag::kNzYEdge : SyntaxTag::kNzXEdge);
    uint32_t orient = vertical ? 1 : 0;
    const auto& order = vertical ? kYEdgeOrder : kXEdgeOrder;
    uint16_t nz_base = vertical ? kNzEdgeYBase : kNzEdgeXBase;
    uint32_t ctx64 =
        clamp_u32(static_cast<uint32_t>(nz.n7x7), 7) * 8 + neighbor_edge_nz;
    int count = code_nz(nz_base, 3, vertical ? nz.y_edge : nz.x_edge, ctx64);
    if constexpr (!kEnc) (vertical ? nz.y_edge : nz.x_edge) = count;

    tag(vertical ? SyntaxTag::kCoefYEdge : SyntaxTag::kCoefXEdge);
    int remaining = count;
    for (int p = 0; p < 7 && remaining > 0; ++p) {
      int cell = order[p];
      uint32_t mean = neighbor_mag(cell);
      uint32_t prior = clamp_u32(bit_length(mean), 10);
      uint32_t nzl = clamp_u32(static_cast<uint32_t>(remaining), 6);
      uint32_t eidx = cx(kExpEdgeBase,
                         {flag_c_, orient, nzl, static_cast<uint32_t>(p), prior});
      int16_t v = kEnc ? blk[cell] : 0;
      int e = code_exponent(
          kExpEdgeBase,
          kEnc ? bit_length(static_cast<uint32_t>(std::abs(v))) : 0, eidx);
      if (e > 0) {
        int len = e - 1;
        int nthres = len > 3 ? len - 3 : 0;
        uint32_t noise_idx =
            cx(kResEdgeBase,
               {flag_c_, orient, static_cast<uint32_t>(p),
                clamp_u32(bit_length(mean), 6)});
        uint32_t mag_ctx = clamp_u32(mean >> 3, 255);
        uint32_t ebucket = clamp_u32(static_cast<uint32_t>(e >= 4 ? e - 4 : 0), 7);
        auto model_for = [&](int j) -> uint16_t {
          return j < nthres ? static_cast<uint16_t>(kResThresBase + j)
                            : static_cast<uint16_t>(kResEdgeBase + (j - nthres));
        };
        auto index_for = [&](int j, uint32_t prefix) -> uint32_t {
          if (j >= nthres) return noise_idx;
          return cx(static_cast<uint16_t>(kResThresBase + j),
                    {flag_c_, mag_ctx, ebucket, prefix});
        };
        int32_t got = code_signed_tail(v, e, cx(kSign, {flag_c_, 1, prior}),
                                       model_for, index_for);
        if constexpr (!kEnc) blk[cell] = static_cast<int16_t>(got);
        --remaining;
      }
    }
  }

  ImgT& img_;
  Store& store_;
  RangeEncoder* enc_;
  RangeDecoder* dec_;
  const CodecTrace* trace_;
  const Registry& reg_;
  uint32_t flag_c_ = 0;
  std::vector<NonzeroCounts> nz_grid_;
};

template <class Store>
EncodeOutcome encode_impl(const CoefficientImage& img, Store& store,
                          const CodecTrace* trace) {
  store.reset();
  EncodeOutcome out;
  RangeEncoder enc(out.payload);
  Coder<true, Store, const CoefficientImage> coder(img, store, &enc, nullptr,
                                                   trace);
  try {
    coder.run();
  } catch (const OverflowSignal&) {
    out.payload.clear();
    out.overflowed = true;
    return out;
  }
  enc.finish();
  return out;
}

template <class Store>
void decode_impl(std::span<const uint8_t> payload, CoefficientImage& img,
                 Store& store, const CodecTrace* trace) {
  store.reset();
  for (Component& c : img.components) {
    c.blocks.assign(static_cast<size_t>(c.width_blocks) * c.height_blocks,
                    std::array<int16_t, 64>{});
  }
  RangeDecoder dec(payload.data(), payload.size());
  Coder<false, Store, CoefficientImage> coder(img, store, nullptr, &dec, trace);
  coder.run();
}

}  // namespace

EncodeOutcome encode_payload(const CoefficientImage& img, UnboundedStore& store,
                             const CodecTrace* trace) {
  return encode_impl(img, store, trace);
}

EncodeOutcome encode_payload(const CoefficientImage& img, BoundedStore& store,
                             const CodecTrace* trace) {
  return encode_impl(img, store, trace);
}

void decode_payload(std::span<const uint8_t> payload, CoefficientImage& img,
                    UnboundedStore& store, const CodecTrace* trace) {
  decode_impl(payload, img, store, trace);
}

void decode_payload(std::span<const uint8_t> payload, CoefficientImage& img,
                    BoundedStore& store, const CodecTrace* trace) {
  decode_impl(payload, img, store, trace);
}

std::vector<uint8_t> write_container(const CoefficientImage& img,
                                     std::span<const uint8_t> payload,
                                     ContainerMode mode, uint32_t tables_hash) {
  ByteWriter body;
  body.u8(static_cast<uint8_t>(mode));
  body.u32(tables_hash);
  write_skeleton(body, img);
  body.u32(static_cast<uint32_t>(payload.size()));
  body.bytes(payload.data(), payload.size());

  ByteWriter out;
  out.bytes("LEPS", 4);
  out.u16(kContainerVersion);
  out.bytes(body.data().data(), body.size());
  out.u32(crc32_of(body.data()));
  return out.take();
}

Container read_container(std::span<const uint8_t> data) {
  ByteReader r(data);
  auto magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "LEPS")
    throw MalformedStream("not a compressed container");
  if (r.u16() != kContainerVersion)
    throw FormatVersionMismatch("unsupported container version");
  const uint8_t* body_begin = r.cursor();

  Container c;
  uint8_t mode = r.u8();
  if (mode > 1) throw MalformedStream("bad container mode");
  c.mode = static_cast<ContainerMode>(mode);
  c.tables_hash = r.u32();
  c.skeleton = read_skeleton(r);
  uint32_t plen = r.u32();
  c.payload = r.bytes(plen);
  const uint8_t* body_end = r.cursor();
  uint32_t stored = r.u32();
  if (r.remaining() != 0) throw MalformedStream("trailing bytes in container");
  if (stored != crc32_of(body_begin, static_cast<size_t>(body_end - body_begin)))
    throw ChecksumMismatch("container checksum mismatch");
  return c;
}

std::vector<uint8_t> encode_to_container(const CoefficientImage& img,
                                         const TableSet* tables,
                                         bool allow_fallback,
                                         std::vector<OverflowRecord>* overflow_log,
                                         const std::string& image_id) {
  if (tables) {
    BoundedStore store(*tables, registry());
    store.set_image_id(image_id);
    EncodeOutcome out = encode_payload(img, store);
    if (!out.overflowed)
      return write_container(img, out.payload, ContainerMode::kBounded,
                             tables->content_hash);
    if (overflow_log)
      overflow_log->insert(overflow_log->end(), store.overflows().begin(),
                           store.overflows().end());
    if (!allow_fallback)
      throw OverflowAbort("bounded probability store overflowed" +
                          (image_id.empty() ? std::string()
                                            : " on " + image_id));
  }
  UnboundedStore store(registry());
  EncodeOutcome out = encode_payload(img, store);
  return write_container(img, out.payload, ContainerMode::kUnboundedFallback,
                         tables ? tables->content_hash : 0);
}

CoefficientImage decode_from_container(std::span<const uint8_t> data,
                                       const TableSet* tables) {
  Container c = read_container(data);
  CoefficientImage img = std::move(c.skeleton);
  if (c.mode == ContainerMode::kBounded) {
    if (!tables)
      throw TableMismatch("container was encoded with a table set; none given");
    if (tables->content_hash != c.tables_hash)
      throw TableMismatch("table set does not match the one used to encode");
    BoundedStore store(*tables, registry());
    decode_payload(c.payload, img, store);
  } else {
    UnboundedStore store(registry());
    decode_payload(c.payload, img, store);
  }
  return img;
}

}  // namespace lep
