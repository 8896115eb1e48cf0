#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "lep/coeff_image.hpp"
#include "lep/store.hpp"

namespace lep {

// Syntax element tags, in the order they are coded per block. Exposed for
// the instrumentation hooks below.
enum class SyntaxTag : uint8_t {
  kNz7x7 = 0,
  kCoef7x7 = 1,
  kNzXEdge = 2,
  kCoefXEdge = 3,
  kNzYEdge = 4,
  kCoefYEdge = 5,
  kDc = 6,
};

// Optional instrumentation. `accesses` records every (model, bin index)
// lookup in coding order; `syntax` records the per-block element sequence.
struct CodecTrace {
  std::vector<std::pair<uint16_t, uint32_t>>* accesses = nullptr;
  std::vector<SyntaxTag>* syntax = nullptr;
};

struct EncodeOutcome {
  std::vector<uint8_t> payload;
  bool overflowed = false;
};

// Payload coding. The store is reset at entry; with a BoundedStore the
// encode aborts on the first overflow (outcome.overflowed, records in the
// store's log). Decoding mirrors encoding exactly; `img` supplies the
// geometry and receives the coefficients.
EncodeOutcome encode_payload(const CoefficientImage& img, UnboundedStore& store,
                             const CodecTrace* trace = nullptr);
EncodeOutcome encode_payload(const CoefficientImage& img, BoundedStore& store,
                             const CodecTrace* trace = nullptr);
void decode_payload(std::span<const uint8_t> payload, CoefficientImage& img,
                    UnboundedStore& store, const CodecTrace* trace = nullptr);
void decode_payload(std::span<const uint8_t> payload, CoefficientImage& img,
                    BoundedStore& store, const CodecTrace* trace = nullptr);

// Container ("LEPS"): versioned little-endian wrapper around the payload
// with geometry, quant tables, the preserved JPEG header blob, the table-set
// content hash and a payload CRC32.
enum class ContainerMode : uint8_t { kBounded = 0, kUnboundedFallback = 1 };

constexpr uint16_t kContainerVersion = 1;

struct Container {
  ContainerMode mode = ContainerMode::kUnboundedFallback;
  uint32_t tables_hash = 0;
  CoefficientImage skeleton;  // geometry + quant + header blob, empty blocks
  std::vector<uint8_t> payload;
};

std::vector<uint8_t> write_container(const CoefficientImage& img,
                                     std::span<const uint8_t> payload,
                                     ContainerMode mode, uint32_t tables_hash);
Container read_container(std::span<const uint8_t> data);

// End-to-end encode. With tables, tries a bounded encode; on overflow either
// re-encodes unbounded (allow_fallback) or throws OverflowAbort. Without
// tables, encodes unbounded directly. Overflow records, if any, are appended
// to *overflow_log.
std::vector<uint8_t> encode_to_container(
    const CoefficientImage& img, const TableSet* tables, bool allow_fallback,
    std::vector<OverflowRecord>* overflow_log = nullptr,
    const std::string& image_id = {});

// Decodes a container; bounded containers require the matching table set
// (TableMismatch otherwise), fallback containers ignore `tables`.
CoefficientImage decode_from_container(std::span<const uint8_t> data,
                                       const TableSet* tables);

}  // namespace lep
