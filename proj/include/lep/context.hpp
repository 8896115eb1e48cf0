#pragma once

#include <array>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <vector>

namespace lep {

// A block is stored as 64 coefficients in raster order. The coder splits it
// into four regions: the DC term, the first row (x edge), the first column
// (y edge) and the interior 7x7 block.
enum class Region : uint8_t { kDc = 0, kXEdge = 1, kYEdge = 2, k7x7 = 3 };

// Zigzag index -> raster index for the full 8x8 block (JPEG scan order).
extern const std::array<uint8_t, 64> kZigzagToRaster;
// Raster index -> zigzag index.
extern const std::array<uint8_t, 64> kRasterToZigzag;

// Scan orders of the AC regions in raster indexes. Edges run outward along
// the first row / first column; the interior follows the zigzag of the 7x7
// subblock.
extern const std::array<uint8_t, 7> kXEdgeOrder;
extern const std::array<uint8_t, 7> kYEdgeOrder;
extern const std::array<uint8_t, 49> k7x7Order;

Region classify(unsigned zigzag_pos);

struct NonzeroCounts {
  int n7x7 = 0;
  int x_edge = 0;
  int y_edge = 0;
};

NonzeroCounts count_nonzeros(const std::array<int16_t, 64>& block);

inline int bit_length(uint32_t v) {
  int n = 0;
  while (v) {
    ++n;
    v >>= 1;
  }
  return n;
}

// Value binarization: exponent, sign, residual. The exponent e is the bit
// length of |v| (0 iff v == 0) and is sent as e one-bits plus a zero
// terminator; the terminator is dropped when e reaches max_exponent. The
// sign follows for nonzero values, then the low e-1 magnitude bits, most
// significant first.
struct Binarized {
  int exponent = 0;
  std::vector<unsigned> exponent_bits;
  int sign = 0;  // 1 = negative
  std::vector<unsigned> residual_bits;
};

Binarized binarize(int32_t v, int max_exponent);
int32_t debinarize(const Binarized& b);

// Exponent cap used by the coefficient coder. Values up to +-2047 fit.
constexpr int kCodedMaxExponent = 11;
constexpr int kCodedMaxMagnitude = (1 << kCodedMaxExponent) - 1;

// DC prediction: rounded average of the available left/above DC values
// (single neighbor passes through, no neighbor predicts 0). Ties round away
// from zero.
int predict_dc(std::optional<int> left, std::optional<int> above);

// The DC residual is folded into [-2047, 2047] modulo 4095 so it fits the
// exponent cap; unwrap restores any DC in that range exactly.
int32_t wrap_dc_residual(int32_t diff);
int32_t unwrap_dc(int32_t pred, int32_t wrapped);

// Rounded mean of two neighbor magnitudes; absent neighbors contribute 0 to
// the sum but the divisor stays 2.
inline uint32_t neighbor_mean(uint32_t left_mag, uint32_t above_mag) {
  return (left_mag + above_mag + 1) / 2;
}

}  // namespace lep
