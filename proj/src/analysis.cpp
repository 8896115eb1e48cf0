#include "lep/analysis.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "lep/errors.hpp"

namespace lep {

std::vector<UtilizationRow> utilization(const AccessHistogram& hist,
                                        const Registry& reg) {
  if (hist.images == 0) throw EmptyCorpus("histogram covers no images");
  std::vector<UtilizationRow> rows;
  rows.reserve(reg.models().size());
  for (size_t m = 0; m < reg.models().size(); ++m) {
    UtilizationRow row;
    row.model = reg.models()[m].name;
    row.total = reg.models()[m].bins;
    uint64_t sum = 0;
    for (uint32_t c : hist.counts[m]) sum += c;
    row.used = static_cast<double>(sum) / static_cast<double>(hist.images);
    row.ratio = row.used / row.total;
    rows.push_back(std::move(row));
  }
  return rows;
}

bool trace_overflows(std::span<const uint32_t> touched_sorted,
                     const AllocationTable& table) {
  if (table.kind == AllocationTable::Kind::kOriginal) return false;
  // touched is sorted and set_of is monotone, so set populations come off a
  // single pass.
  uint32_t cur_set = 0;
  uint32_t in_set = 0;
  for (uint32_t idx : touched_sorted) {
    uint32_t s = table.set_of(idx);
    if (s != cur_set) {
      cur_set = s;
      in_set = 0;
    }
    if (++in_set > table.ways) return true;
  }
  return false;
}

double model_overflow_rate(std::span<const ImageTrace> traces, uint16_t model,
                           const AllocationTable& table) {
  if (traces.empty()) throw EmptyCorpus("no traces to evaluate");
  size_t hits = 0;
  for (const ImageTrace& t : traces)
    if (trace_overflows(t.touched[model], table)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(traces.size());
}

AllocationTable allocation_for(const AccessHistogram& hist, const Registry& reg,
                               uint16_t model, uint32_t depth, uint32_t ways) {
  const ModelInfo& info = reg.model(model);
  return build_allocation(info.name, hist.counts[model], hist.images, info.bins,
                          depth, ways);
}

SweepResult sweep(std::span<const ImageTrace> stat_traces,
                  std::span<const ImageTrace> test_traces,
                  const AccessHistogram& stat_hist, const Registry& reg,
                  std::span<const uint16_t> models,
                  std::span<const uint32_t> ways_list,
                  std::span<const uint32_t> depth_list) {
  SweepResult result;
  for (uint16_t m : models) {
    for (uint32_t ways : ways_list) {
      double prev_stat = 1.0, prev_test = 1.0;
      bool first = true;
      for (uint32_t depth : depth_list) {
        if (depth % ways) continue;  // not a realizable configuration
        AllocationTable t = allocation_for(stat_hist, reg, m, depth, ways);
        double rs = model_overflow_rate(stat_traces, m, t);
        double rt = test_traces.empty()
                        ? 0.0
                        : model_overflow_rate(test_traces, m, t);
        result.rows.push_back({reg.model(m).name, ways, depth, "statistical", rs});
        if (!test_traces.empty())
          result.rows.push_back({reg.model(m).name, ways, depth, "test", rt});
        if (!first) {
          auto warn = [&](const char* split, double prev, double now) {
            std::ostringstream os;
            os << reg.model(m).name << " ways=" << ways << " depth=" << depth
               << ": " << split << " overflow rate rose from " << prev << " to "
               << now;
            result.warnings.push_back(os.str());
          };
          if (rs > prev_stat) warn("statistical", prev_stat, rs);
          if (!test_traces.empty() && rt > prev_test) warn("test", prev_test, rt);
        }
        prev_stat = rs;
        prev_test = rt;
        first = false;
      }
    }
  }
  return result;
}

uint32_t min_depth(std::span<const ImageTrace> stat_traces,
                   std::span<const ImageTrace> test_traces,
                   const AccessHistogram& stat_hist, const Registry& reg,
                   uint16_t model, uint32_t ways, bool both_splits) {
  if (ways == 0) throw RangeError("ways must be positive");
  const uint32_t range = reg.model(model).bins;

  auto clean = [&](uint32_t depth) {
    AllocationTable t = allocation_for(stat_hist, reg, model, depth, ways);
    if (model_overflow_rate(stat_traces, model, t) > 0) return false;
    if (both_splits && !test_traces.empty() &&
        model_overflow_rate(test_traces, model, t) > 0)
      return false;
    return true;
  };

  // Depth covering the whole range can never overflow, so the doubling
  // search below always terminates.
  uint32_t cap = ((range + ways - 1) / ways) * ways;
  uint32_t hi = ways;
  while (hi < cap && !clean(hi)) hi *= 2;
  if (hi >= cap) hi = cap;

  uint32_t lo = ways;  // smallest candidate
  // Invariant: clean(hi); bisect over multiples of ways.
  while (lo < hi) {
    uint32_t steps = (lo / ways + hi / ways) / 2;
    uint32_t mid = steps * ways;
    if (clean(mid))
      hi = mid;
    else
      lo = mid + ways;
  }
  // Boundaries are rebuilt per depth, so cleanliness is not perfectly
  // monotone; walk down while the next depth below is still clean.
  while (hi > ways && clean(hi - ways)) hi -= ways;
  if (!clean(hi))
    throw InvariantViolation("min depth search failed for " +
                             reg.model(model).name);
  return hi;
}

CostDecision cost_decision(uint32_t index_range, uint32_t depth,
                           double ma_ratio) {
  if (index_range == 0) throw RangeError("index range must be positive");
  return static_cast<double>(depth) / static_cast<double>(index_range) < ma_ratio
             ? CostDecision::kOptimized
             : CostDecision::kOriginal;
}

namespace {

std::ofstream open_csv(const std::filesystem::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot open " + p.string() + " for writing");
  f << std::setprecision(17);
  return f;
}

}  // namespace

void write_utilization_csv(const std::filesystem::path& p,
                           std::span<const UtilizationRow> rows) {
  auto f = open_csv(p);
  f << "model,used_mean,total,ratio\n";
  for (const auto& r : rows)
    f << r.model << ',' << r.used << ',' << r.total << ',' << r.ratio << '\n';
  if (!f.flush()) throw Error("failed writing " + p.string());
}

void write_sweep_csv(const std::filesystem::path& p,
                     std::span<const SweepRow> rows) {
  auto f = open_csv(p);
  f << "model,ways,depth,split,overflow_rate\n";
  for (const auto& r : rows)
    f << r.model << ',' << r.ways << ',' << r.depth << ',' << r.split << ','
      << r.rate << '\n';
  if (!f.flush()) throw Error("failed writing " + p.string());
}

void write_mindepth_csv(const std::filesystem::path& p,
                        std::span<const MinDepthRow> rows) {
  auto f = open_csv(p);
  f << "model,ways,min_depth,index_range,saving\n";
  for (const auto& r : rows)
    f << r.model << ',' << r.ways << ',' << r.depth << ',' << r.index_range
      << ',' << r.saving << '\n';
  if (!f.flush()) throw Error("failed writing " + p.string());
}

}  // namespace lep
