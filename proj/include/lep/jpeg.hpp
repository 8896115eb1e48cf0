#pragma once

#include <span>
#include <vector>

#include "lep/coeff_image.hpp"

namespace lep {

// Entropy-decodes a baseline sequential JPEG (SOF0, 8-bit, Huffman, single
// scan, 1-3 components, restart markers allowed) into quantized DCT
// coefficients. No dequantization or IDCT is performed. Throws
// UnsupportedFrame for valid-but-unsupported profiles and MalformedStream
// for broken ones.
CoefficientImage parse_jpeg(std::span<const uint8_t> data);

// Re-encodes the coefficients with the Huffman tables recorded in the header
// blob and returns a standalone JPEG (SOI..EOI). The scan is written without
// restart markers; a DRI segment in the blob is rewritten with interval 0 so
// the output stays conforming. parse_jpeg(rebuild_jpeg(img)) reproduces the
// coefficients exactly.
std::vector<uint8_t> rebuild_jpeg(const CoefficientImage& img);

}  // namespace lep
