#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lep {

class Registry;
struct AccessHistogram;

// Iterated clip-and-renormalize weight construction. Input probabilities are
// normalized first; the loop caps entries at 1/depth and rescales until the
// maximum is within (1+kWeightSlack)/depth or the iteration ceiling hits,
// then applies one exact clip and restores unit mass by scaling the uncapped
// entries. When the active support is smaller than depth the fixed point
// degenerates to "every active entry capped"; the result then sums to
// active/depth and the trailing sets of the derived table stay empty.
constexpr double kWeightSlack = 1e-9;
constexpr int kWeightMaxIters = 10000;

std::vector<double> build_weights(std::span<const double> p, uint32_t depth);

// Cumulative slot positions: h[i] = depth * sum(w[0..i]).
std::vector<double> build_hash(std::span<const double> w, uint32_t depth);

// Set boundaries for an N-way store of depth slots (depth must divide by
// ways). Boundary k is the smallest index whose interval start h[index-1]
// reaches k*ways; k runs 1..M-1 with M = depth/ways. Unreachable boundaries
// are stored as index_range, leaving the trailing sets empty.
std::vector<uint32_t> derive_boundaries(std::span<const double> h,
                                        uint32_t depth, uint32_t ways);

// ceil(log2(width)); 0 for width <= 1.
int tag_width_for(uint32_t width);

struct AllocationTable {
  enum class Kind : uint8_t { kOriginal = 0, kOptimized = 1 };

  std::string model;
  Kind kind = Kind::kOriginal;
  uint32_t index_range = 0;
  uint32_t depth = 0;  // == index_range for kOriginal
  uint32_t ways = 1;
  std::vector<uint32_t> bounds;  // M-1 nondecreasing boundaries (optimized)

  // Builder outputs kept for audit; empty after load_tables.
  std::vector<double> weights;
  std::vector<double> hash;

  uint32_t num_sets() const { return ways ? depth / ways : 0; }
  uint32_t set_of(uint32_t index) const;
  uint32_t set_start(uint32_t set) const;
  uint32_t set_width(uint32_t set) const;
  int tag_width(uint32_t set) const { return tag_width_for(set_width(set)); }
};

struct TableSet {
  std::vector<AllocationTable> models;  // registry order
  uint32_t content_hash = 0;            // CRC32 of the serialized records
};

enum class DepthPolicy { kFixed, kMinZeroOverflow };

struct BuildConfig {
  uint32_t ways = 32;
  DepthPolicy policy = DepthPolicy::kFixed;
  uint32_t fixed_depth = 0;       // kFixed: global depth budget
  double ma_ratio = 0.3;          // optimized iff depth/range < ma_ratio
};

// Per-model allocation from presence counts. depth is rounded semantics-free:
// it must already be a multiple of ways (IndivisibleDepth otherwise).
AllocationTable build_allocation(const std::string& model_name,
                                 std::span<const uint32_t> counts,
                                 uint64_t images, uint32_t index_range,
                                 uint32_t depth, uint32_t ways);

// Full table set. Models whose depth/range ratio is not below ma_ratio, or
// whose profile is empty, fall back to kOriginal (direct indexing). depths
// supplies the per-model budget for optimized candidates.
TableSet assemble_tables(const AccessHistogram& hist, const Registry& reg,
                         std::span<const uint32_t> depths,
                         const BuildConfig& cfg);

constexpr uint16_t kTablesVersion = 1;

std::vector<uint8_t> serialize_tables(const TableSet& ts);
TableSet parse_tables(std::span<const uint8_t> data, const Registry& reg);
void save_tables(const std::filesystem::path& p, const TableSet& ts);
TableSet load_tables(const std::filesystem::path& p, const Registry& reg);

}  // namespace lep
