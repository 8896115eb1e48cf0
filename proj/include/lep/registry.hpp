#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lep/errors.hpp"

namespace lep {

// Context field of a probability model. A model's bin index is the
// mixed-radix flattening of its fields: index = ((f0*r1 + f1)*r2 + f2)...
struct Field {
  const char* name;
  uint32_t range;
};

struct ModelInfo {
  std::string name;
  std::vector<Field> fields;
  uint32_t bins = 0;  // product of field ranges
  uint32_t bw = 0;    // bit width of the concatenated (unflattened) index
};

// Stable model ids. Families are contiguous so family+offset arithmetic
// works in the coder hot path.
enum ModelId : uint16_t {
  kExp7x7Base = 0,    // exp_7x7_0..10
  kExpEdgeBase = 11,  // exp_edge_0..10
  kExpDcBase = 22,    // exp_dc_0..10
  kRes7x7Base = 33,   // res_7x7_0..9
  kResDcBase = 43,    // res_dc_0..9
  kResEdgeBase = 53,  // res_edge_0..2
  kResThresBase = 56, // res_thres_0..7
  kNz7x7Base = 64,    // nz_7x7_0..5
  kNzEdgeXBase = 70,  // nz_edgex_0..2
  kNzEdgeYBase = 73,  // nz_edgey_0..2
  kSign = 76,
  kNumModels = 77,
};

constexpr int kNumExponentBits = 11;  // unary positions 0..10 per exp family

class Registry {
 public:
  Registry();

  const std::vector<ModelInfo>& models() const { return models_; }
  const ModelInfo& model(uint16_t id) const { return models_.at(id); }
  uint16_t id_of(const std::string& name) const;  // throws UnknownModel
  uint32_t total_bins() const { return total_bins_; }

 private:
  std::vector<ModelInfo> models_;
  uint32_t total_bins_ = 0;
};

const Registry& registry();

// Mixed-radix flattening of context field values; throws RangeError when a
// value falls outside its declared range.
uint32_t flatten(std::span<const uint32_t> values, std::span<const Field> layout);

// Model id for bit position `bit_pos` of an exponent family (one of the
// three *_Base exp ids). Positions run 0..10; the first unary bit maps to
// the family's model 0.
uint16_t model_for_exponent_bit(uint16_t family_base, int bit_pos);

}  // namespace lep
