#include "lep/context.hpp"

#include <cstdlib>

#include "lep/errors.hpp"

namespace lep {
namespace {

// Diagonal walk with the JPEG parity convention: the first step moves right.
template <int N>
constexpr std::array<uint8_t, N * N> zigzag_positions() {
  std::array<uint8_t, N * N> order{};
  int r = 0, c = 0;
  for (int i = 0; i < N * N; ++i) {
    order[i] = static_cast<uint8_t>(r * N + c);
    if ((r + c) % 2 == 0) {  // moving up-right
      if (c == N - 1)
        ++r;
      else if (r == 0)
        ++c;
      else {
        --r;
        ++c;
      }
    } else {  // moving down-left
      if (r == N - 1)
        ++c;
      else if (c == 0)
        ++r;
      else {
        ++r;
        --c;
      }
    }
  }
  return order;
}

constexpr std::array<uint8_t, 64> kZz8 = zigzag_positions<8>();

constexpr std::array<uint8_t, 64> invert(const std::array<uint8_t, 64>& fwd) {
  std::array<uint8_t, 64> inv{};
  for (int i = 0; i < 64; ++i) inv[fwd[i]] = static_cast<uint8_t>(i);
  return inv;
}

constexpr std::array<uint8_t, 7> edge_cells(bool x_edge) {
  std::array<uint8_t, 7> cells{};
  for (int i = 0; i < 7; ++i)
    cells[i] = static_cast<uint8_t>(x_edge ? (i + 1) : 8 * (i + 1));
  return cells;
}

// Interior scan: zigzag of the 7x7 subblock, offset to raster cell (1,1).
constexpr std::array<uint8_t, 49> interior_cells() {
  std::array<uint8_t, 49> cells{};
  auto sub = zigzag_positions<7>();
  for (int i = 0; i < 49; ++i) {
    int r = sub[i] / 7, c = sub[i] % 7;
    cells[i] = static_cast<uint8_t>((r + 1) * 8 + (c + 1));
  }
  return cells;
}

}  // namespace

const std::array<uint8_t, 64> kZigzagToRaster = kZz8;
const std::array<uint8_t, 64> kRasterToZigzag = invert(kZz8);
const std::array<uint8_t, 7> kXEdgeOrder = edge_cells(true);
const std::array<uint8_t, 7> kYEdgeOrder = edge_cells(false);
const std::array<uint8_t, 49> k7x7Order = interior_cells();

Region classify(unsigned zigzag_pos) {
  if (zigzag_pos >= 64) throw RangeError("zigzag position out of range");
  unsigned raster = kZigzagToRaster[zigzag_pos];
  unsigned row = raster / 8, col = raster % 8;
  if (row == 0 && col == 0) return Region::kDc;
  if (row == 0) return Region::kXEdge;
  if (col == 0) return Region::kYEdge;
  return Region::k7x7;
}

NonzeroCounts count_nonzeros(const std::array<int16_t, 64>& block) {
  NonzeroCounts n;
  for (uint8_t cell : k7x7Order) n.n7x7 += block[cell] != 0;
  for (uint8_t cell : kXEdgeOrder) n.x_edge += block[cell] != 0;
  for (uint8_t cell : kYEdgeOrder) n.y_edge += block[cell] != 0;
  return n;
}

Binarized binarize(int32_t v, int max_exponent) {
  Binarized b;
  uint32_t mag = static_cast<uint32_t>(v < 0 ? -static_cast<int64_t>(v) : v);
  b.exponent = bit_length(mag);
  if (b.exponent > max_exponent)
    throw RangeError("value magnitude exceeds exponent cap");
  for (int i = 0; i < b.exponent; ++i) b.exponent_bits.push_back(1);
  if (b.exponent < max_exponent) b.exponent_bits.push_back(0);
  if (v != 0) {
    b.sign = v < 0;
    for (int i = b.exponent - 2; i >= 0; --i)
      b.residual_bits.push_back((mag >> i) & 1);
  }
  return b;
}

int32_t debinarize(const Binarized& b) {
  if (b.exponent == 0) return 0;
  uint32_t mag = 1;  // implicit leading bit
  for (unsigned bit : b.residual_bits) mag = (mag << 1) | bit;
  return b.sign ? -static_cast<int32_t>(mag) : static_cast<int32_t>(mag);
}

int predict_dc(std::optional<int> left, std::optional<int> above) {
  if (left && above) {
    int s = *left + *above;
    return s >= 0 ? (s + 1) / 2 : (s - 1) / 2;
  }
  if (left) return *left;
  if (above) return *above;
  return 0;
}

int32_t wrap_dc_residual(int32_t diff) {
  const int32_t span = 2 * kCodedMaxMagnitude + 1;  // 4095
  if (diff > kCodedMaxMagnitude) return diff - span;
  if (diff < -kCodedMaxMagnitude) return diff + span;
  return diff;
}

int32_t unwrap_dc(int32_t pred, int32_t wrapped) {
  const int32_t span = 2 * kCodedMaxMagnitude + 1;
  int32_t dc = pred + wrapped;
  if (dc > kCodedMaxMagnitude) return dc - span;
  if (dc < -kCodedMaxMagnitude) return dc + span;
  return dc;
}

}  // namespace lep
