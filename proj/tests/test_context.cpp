#include "doctest.h"

#include <set>

#include "lep/context.hpp"
#include "lep/errors.hpp"

using namespace lep;

namespace {

// The standard JPEG scan order, written out as the reference.
constexpr uint8_t kReferenceZigzag[64] = {
    0,  1,  8,  16, 9,  2,  3,  10, 17, 24, 32, 25, 18, 11, 4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6,  7,  14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63};

}  // namespace

TEST_CASE("zigzag tables match the classic scan order") {
  for (int i = 0; i < 64; ++i) {
    CHECK(kZigzagToRaster[i] == kReferenceZigzag[i]);
    CHECK(kRasterToZigzag[kZigzagToRaster[i]] == i);
  }
}

TEST_CASE("region classification covers the block as 1+7+7+49") {
  int dc = 0, x = 0, y = 0, interior = 0;
  for (unsigned z = 0; z < 64; ++z) {
    int cell = kZigzagToRaster[z];
    int row = cell / 8, col = cell % 8;
    Region r = classify(z);
    switch (r) {
      case Region::kDc:
        CHECK(cell == 0);
        ++dc;
        break;
      case Region::kXEdge:
        CHECK(row == 0);
        CHECK(col >= 1);
        ++x;
        break;
      case Region::kYEdge:
        CHECK(col == 0);
        CHECK(row >= 1);
        ++y;
        break;
      case Region::k7x7:
        CHECK(row >= 1);
        CHECK(col >= 1);
        ++interior;
        break;
    }
  }
  CHECK(dc == 1);
  CHECK(x == 7);
  CHECK(y == 7);
  CHECK(interior == 49);
}

TEST_CASE("edge scan orders walk outward along row 0 and column 0") {
  for (int i = 0; i < 7; ++i) {
    CHECK(kXEdgeOrder[i] == i + 1);
    CHECK(kYEdgeOrder[i] == 8 * (i + 1));
  }
}

TEST_CASE("interior order is the zigzag of the 7x7 subblock") {
  // First steps from (1,1): right, then down-left, then down, ...
  CHECK(k7x7Order[0] == 9);
  CHECK(k7x7Order[1] == 10);
  CHECK(k7x7Order[2] == 17);
  CHECK(k7x7Order[3] == 25);
  CHECK(k7x7Order[4] == 18);
  CHECK(k7x7Order[5] == 11);
  CHECK(k7x7Order[48] == 63);

  std::set<int> seen;
  for (int cell : k7x7Order) {
    CHECK(cell / 8 >= 1);
    CHECK(cell % 8 >= 1);
    seen.insert(cell);
  }
  CHECK(seen.size() == 49);
}

TEST_CASE("bit_length") {
  CHECK(bit_length(0) == 0);
  CHECK(bit_length(1) == 1);
  CHECK(bit_length(2) == 2);
  CHECK(bit_length(3) == 2);
  CHECK(bit_length(1023) == 10);
  CHECK(bit_length(1024) == 11);
  CHECK(bit_length(2047) == 11);
}

TEST_CASE("binarize worked examples") {
  Binarized b = binarize(6, 15);
  CHECK(b.exponent == 3);
  CHECK(b.exponent_bits == std::vector<unsigned>{1, 1, 1, 0});
  CHECK(b.sign == 0);
  CHECK(b.residual_bits == std::vector<unsigned>{1, 0});

  b = binarize(-1, 15);
  CHECK(b.exponent == 1);
  CHECK(b.exponent_bits == std::vector<unsigned>{1, 0});
  CHECK(b.sign == 1);
  CHECK(b.residual_bits.empty());

  b = binarize(0, 15);
  CHECK(b.exponent == 0);
  CHECK(b.exponent_bits == std::vector<unsigned>{0});
  CHECK(b.residual_bits.empty());
}

TEST_CASE("terminator is dropped at the exponent cap") {
  Binarized b = binarize(-32767, 15);
  CHECK(b.exponent == 15);
  CHECK(b.exponent_bits.size() == 15);  // no trailing zero
  for (unsigned bit : b.exponent_bits) CHECK(bit == 1);
  CHECK(b.residual_bits.size() == 14);

  CHECK_THROWS_AS(binarize(2048, 11), RangeError);
  CHECK_NOTHROW(binarize(2047, 11));
}

TEST_CASE("binarize is a bijection over the 15-bit range") {
  for (int32_t v = -32767; v <= 32767; ++v)
    REQUIRE(debinarize(binarize(v, 15)) == v);
}

TEST_CASE("DC prediction averages with ties away from zero") {
  CHECK(predict_dc(10, 14) == 12);
  CHECK(predict_dc(10, 15) == 13);
  CHECK(predict_dc(-10, -15) == -13);
  CHECK(predict_dc(7, std::nullopt) == 7);
  CHECK(predict_dc(std::nullopt, -3) == -3);
  CHECK(predict_dc(std::nullopt, std::nullopt) == 0);
  CHECK(predict_dc(0, 0) == 0);
  CHECK(predict_dc(-1, 2) == 1);  // 0.5 rounds away from zero
}

TEST_CASE("DC residual wrap is exact over the representable range") {
  for (int pred : {-2047, -1024, -1, 0, 1, 600, 2047})
    for (int dc = -2047; dc <= 2047; dc += 7) {
      int32_t w = wrap_dc_residual(dc - pred);
      CHECK(w >= -2047);
      CHECK(w <= 2047);
      REQUIRE(unwrap_dc(pred, w) == dc);
    }
}

TEST_CASE("neighbor mean keeps the divisor at two") {
  CHECK(neighbor_mean(0, 0) == 0);
  CHECK(neighbor_mean(1, 0) == 1);
  CHECK(neighbor_mean(3, 4) == 4);
  CHECK(neighbor_mean(7, 0) == 4);
}

TEST_CASE("count_nonzeros splits by region") {
  std::array<int16_t, 64> blk{};
  blk[0] = 100;   // DC, not counted
  blk[1] = 3;     // x edge
  blk[7] = -2;    // x edge
  blk[8] = 1;     // y edge
  blk[9] = 5;     // interior
  blk[63] = -1;   // interior
  NonzeroCounts nz = count_nonzeros(blk);
  CHECK(nz.x_edge == 2);
  CHECK(nz.y_edge == 1);
  CHECK(nz.n7x7 == 2);
}
