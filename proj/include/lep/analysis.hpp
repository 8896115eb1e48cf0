#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lep/alloc.hpp"
#include "lep/registry.hpp"
#include "lep/store.hpp"

namespace lep {

struct UtilizationRow {
  std::string model;
  double used = 0;     // mean touched bins per image
  uint32_t total = 0;  // bin count
  double ratio = 0;
};

// Per-image used/total ratio averaged over the corpus, per model.
std::vector<UtilizationRow> utilization(const AccessHistogram& hist,
                                        const Registry& reg);

// True when replaying the trace against the table would overflow some set
// (more distinct indexes mapped to it than there are ways).
bool trace_overflows(std::span<const uint32_t> touched_sorted,
                     const AllocationTable& table);

// Fraction of images whose trace overflows the given model's table.
double model_overflow_rate(std::span<const ImageTrace> traces, uint16_t model,
                           const AllocationTable& table);

// Allocation for a single model at the given depth/ways, derived from the
// statistical histogram. Depths at or beyond the index range degrade to a
// uniform grid (capacity covers every index, so overflow is impossible).
AllocationTable allocation_for(const AccessHistogram& hist, const Registry& reg,
                               uint16_t model, uint32_t depth, uint32_t ways);

struct SweepRow {
  std::string model;
  uint32_t ways = 0;
  uint32_t depth = 0;
  std::string split;  // "statistical" | "test"
  double rate = 0;
};

// Overflow-rate grid over ways x depth for the given models, evaluated on
// both splits with tables always derived from the statistical histogram.
// Non-monotone depth curves (possible, since boundaries are rebuilt per
// depth) are reported via the returned warnings.
struct SweepResult {
  std::vector<SweepRow> rows;
  std::vector<std::string> warnings;
};

SweepResult sweep(std::span<const ImageTrace> stat_traces,
                  std::span<const ImageTrace> test_traces,
                  const AccessHistogram& stat_hist, const Registry& reg,
                  std::span<const uint16_t> models,
                  std::span<const uint32_t> ways_list,
                  std::span<const uint32_t> depth_list);

// Smallest depth (multiple of ways) with zero overflow on the governing
// split(s), found by doubling then bisection and tightened linearly so that
// depth - ways still overflows (unless depth == ways).
uint32_t min_depth(std::span<const ImageTrace> stat_traces,
                   std::span<const ImageTrace> test_traces,
                   const AccessHistogram& stat_hist, const Registry& reg,
                   uint16_t model, uint32_t ways, bool both_splits);

struct MinDepthRow {
  std::string model;
  uint32_t ways = 0;
  uint32_t depth = 0;
  uint32_t index_range = 0;
  double saving = 0;  // 1 - depth/index_range
};

enum class CostDecision { kOriginal, kOptimized };

// Optimized wins when the depth fits under ma_ratio of the direct range
// (the break-even ratio of per-access memory cost between the two layouts).
CostDecision cost_decision(uint32_t index_range, uint32_t depth,
                           double ma_ratio = 0.3);

void write_utilization_csv(const std::filesystem::path& p,
                           std::span<const UtilizationRow> rows);
void write_sweep_csv(const std::filesystem::path& p,
                     std::span<const SweepRow> rows);
void write_mindepth_csv(const std::filesystem::path& p,
                        std::span<const MinDepthRow> rows);

}  // namespace lep
