#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lep/errors.hpp"

namespace lep {

// Binary range coder, 32-bit registers with byte-wise renormalization. The
// encoder keeps the low end of the interval in a 64-bit accumulator so a
// carry out of bit 31 can be propagated through the cached 0xff run before
// the bytes are committed.
//
// p0q16 is the probability of a 0 bit in 1/65536 units and must stay inside
// [1, 65535]; BinState::p0_q16() satisfies that by construction.

class RangeEncoder {
 public:
  explicit RangeEncoder(std::vector<uint8_t>& out) : out_(out) {}

  void encode(unsigned bit, uint16_t p0q16) {
    uint32_t bound = (range_ >> 16) * p0q16;
    if (bit == 0) {
      range_ = bound;
    } else {
      low_ += bound;
      range_ -= bound;
    }
    while (range_ < (1u << 24)) {
      range_ <<= 8;
      shift_low();
    }
  }

  // Deterministic flush; emits the remaining 5 bytes of the low register.
  // The encoder must not be reused afterwards.
  void finish() {
    for (int i = 0; i < 5; ++i) shift_low();
  }

 private:
  void shift_low() {
    if (static_cast<uint32_t>(low_) < 0xff000000u || (low_ >> 32) != 0) {
      uint8_t carry = static_cast<uint8_t>(low_ >> 32);
      out_.push_back(static_cast<uint8_t>(cache_ + carry));
      while (pending_ > 0) {
        out_.push_back(static_cast<uint8_t>(0xff + carry));
        --pending_;
      }
      cache_ = static_cast<uint8_t>(low_ >> 24);
    } else {
      ++pending_;
    }
    low_ = (low_ << 8) & 0xffffffffull;
  }

  std::vector<uint8_t>& out_;
  uint64_t low_ = 0;
  uint32_t range_ = 0xffffffffu;
  uint8_t cache_ = 0;   // first committed byte is always this initial 0
  uint64_t pending_ = 0;
};

class RangeDecoder {
 public:
  RangeDecoder(const uint8_t* data, size_t size) : p_(data), end_(data + size) {
    next_byte();  // pad byte mirrored from the encoder cache
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
  }

  unsigned decode(uint16_t p0q16) {
    uint32_t bound = (range_ >> 16) * p0q16;
    unsigned bit;
    if (code_ < bound) {
      range_ = bound;
      bit = 0;
    } else {
      code_ -= bound;
      range_ -= bound;
      bit = 1;
    }
    while (range_ < (1u << 24)) {
      range_ <<= 8;
      code_ = (code_ << 8) | next_byte();
    }
    return bit;
  }

 private:
  uint8_t next_byte() {
    if (p_ == end_) throw CorruptStream("range coder ran past end of payload");
    return *p_++;
  }

  const uint8_t* p_;
  const uint8_t* end_;
  uint32_t range_ = 0xffffffffu;
  uint32_t code_ = 0;
};

}  // namespace lep
