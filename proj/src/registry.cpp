#include "lep/registry.hpp"

#include "lep/alloc.hpp"

namespace lep {
namespace {

uint32_t ceil_div(uint32_t a, uint32_t b) { return (a + b - 1) / b; }

ModelInfo make_model(std::string name, std::vector<Field> fields) {
  ModelInfo m;
  m.name = std::move(name);
  m.fields = std::move(fields);
  m.bins = 1;
  for (const Field& f : m.fields) {
    if (f.range == 0) throw InvariantViolation("zero field range");
    m.bins *= f.range;
    m.bw += static_cast<uint32_t>(tag_width_for(f.range));
  }
  return m;
}

}  // namespace

// Model inventory. Bin counts are load-bearing: the store layouts, tag
// widths and the analysis baselines all derive from them.
//
//   exp_7x7_*   11 x 10780   exponent unary bits, interior coefficients
//   exp_edge_*  11 x  2156   exponent unary bits, edge coefficients
//   exp_dc_*    11 x   204   exponent unary bits, DC residual
//   res_7x7_*   10 x  1260   magnitude residual bits, interior
//   res_dc_*    10 x    12   magnitude residual bits, DC
//   res_edge_*   3 x   196   low residual bits, edges
//   res_thres_* 4096..262144,4096  high residual bits of large edge values
//   nz_7x7_*    500..20      nonzero-count bits, interior (6-bit value)
//   nz_edgex_*  512,256,128  nonzero-count bits, first row (3-bit value)
//   nz_edgey_*  512,256,128  nonzero-count bits, first column
//   sign             66      coefficient signs
//
// Total 685034 bins across 77 models.
Registry::Registry() {
  models_.reserve(kNumModels);
  auto add = [this](ModelInfo m) { models_.push_back(std::move(m)); };

  for (int k = 0; k <= 10; ++k)
    add(make_model("exp_7x7_" + std::to_string(k),
                   {{"flag_c", 2}, {"num_nz_left", 10}, {"coef", 49},
                    {"prior", 11}}));
  for (int k = 0; k <= 10; ++k)
    add(make_model("exp_edge_" + std::to_string(k),
                   {{"flag_c", 2}, {"orient", 2}, {"num_nz_left", 7},
                    {"coef", 7}, {"prior", 11}}));
  for (int k = 0; k <= 10; ++k)
    add(make_model("exp_dc_" + std::to_string(k),
                   {{"flag_c", 2}, {"nz_total", 6}, {"prior", 17}}));
  for (int k = 0; k <= 9; ++k)
    add(make_model("res_7x7_" + std::to_string(k),
                   {{"flag_c", 2}, {"coef_zz", 63}, {"num_nz_left", 10}}));
  for (int k = 0; k <= 9; ++k)
    add(make_model("res_dc_" + std::to_string(k),
                   {{"flag_c", 2}, {"prior", 6}}));
  for (int k = 0; k <= 2; ++k)
    add(make_model("res_edge_" + std::to_string(k),
                   {{"flag_c", 2}, {"orient", 2}, {"coef", 7}, {"prior", 7}}));
  // res_thres_k covers the threshold bit with k previously coded threshold
  // bits; those bits are its prefix context. The last model drops the prefix.
  for (int k = 0; k <= 7; ++k) {
    std::vector<Field> f{{"flag_c", 2}, {"mag_ctx", 256}, {"exponent", 8}};
    if (k < 7) f.push_back({"prefix", 1u << k});
    add(make_model("res_thres_" + std::to_string(k), std::move(f)));
  }
  // nz_*_k codes significance bit k of the count; bits are sent most
  // significant first, so the higher bits form the prefix context.
  for (int k = 0; k <= 5; ++k)
    add(make_model("nz_7x7_" + std::to_string(k),
                   {{"flag_c", 2}, {"neighbor_nz", 10},
                    {"prefix", ceil_div(50, 1u << (k + 1))}}));
  for (int k = 0; k <= 2; ++k)
    add(make_model("nz_edgex_" + std::to_string(k),
                   {{"flag_c", 2}, {"nz_and_neighbor", 64},
                    {"prefix", ceil_div(8, 1u << (k + 1))}}));
  for (int k = 0; k <= 2; ++k)
    add(make_model("nz_edgey_" + std::to_string(k),
                   {{"flag_c", 2}, {"nz_and_neighbor", 64},
                    {"prefix", ceil_div(8, 1u << (k + 1))}}));
  add(make_model("sign", {{"flag_c", 2}, {"region", 3}, {"prior", 11}}));

  if (models_.size() != kNumModels)
    throw InvariantViolation("model inventory size mismatch");
  for (const ModelInfo& m : models_) total_bins_ += m.bins;
}

uint16_t Registry::id_of(const std::string& name) const {
  for (size_t i = 0; i < models_.size(); ++i)
    if (models_[i].name == name) return static_cast<uint16_t>(i);
  throw UnknownModel("unknown model: " + name);
}

const Registry& registry() {
  static const Registry reg;
  return reg;
}

uint32_t flatten(std::span<const uint32_t> values,
                 std::span<const Field> layout) {
  if (values.size() != layout.size())
    throw RangeError("field count does not match layout");
  uint32_t index = 0;
  for (size_t i = 0; i < values.size(); ++i) {
    if (values[i] >= layout[i].range)
      throw RangeError(std::string("field value out of range: ") +
                       layout[i].name);
    index = index * layout[i].range + values[i];
  }
  return index;
}

uint16_t model_for_exponent_bit(uint16_t family_base, int bit_pos) {
  if (family_base != kExp7x7Base && family_base != kExpEdgeBase &&
      family_base != kExpDcBase)
    throw RangeError("not an exponent family");
  if (bit_pos < 0 || bit_pos >= kNumExponentBits)
    throw RangeError("exponent bit position out of range");
  return static_cast<uint16_t>(family_base + bit_pos);
}

}  // namespace lep
