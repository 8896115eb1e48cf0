#pragma once

#include <cstdint>

namespace lep {

// Adaptive binary probability estimator. One of these backs every bin of
// every probability model. p0 is the Laplace estimate (c0+1)/(c0+c1+2); a
// fresh bin therefore predicts 1/2.
struct BinState {
  uint8_t c0 = 0;
  uint8_t c1 = 0;

  double p0() const { return (c0 + 1.0) / (c0 + c1 + 2.0); }

  // Probability of a 0 bit in 1/65536 units, as consumed by the range coder.
  // Bounded away from 0 and 65536 by the counter saturation (min 255, max
  // 65280), so the coder interval never collapses.
  uint16_t p0_q16() const {
    uint32_t num = (static_cast<uint32_t>(c0) + 1) << 16;
    return static_cast<uint16_t>(num / (static_cast<uint32_t>(c0) + c1 + 2));
  }

  // Counters saturate at 255: when one would exceed it, both are halved
  // (rounding down) before the increment, so recent history dominates.
  void update(unsigned bit) {
    uint8_t& c = bit ? c1 : c0;
    if (c == 255) {
      c0 >>= 1;
      c1 >>= 1;
    }
    ++c;
  }
};

}  // namespace lep
