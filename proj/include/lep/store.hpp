#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "lep/alloc.hpp"
#include "lep/bin_state.hpp"
#include "lep/registry.hpp"

namespace lep {

// Per-image access trace: for every model, the sorted distinct bin indexes
// the coder touched. This is a pure function of the coefficients, so the
// analysis layer can replay traces against candidate tables without
// re-encoding.
struct ImageTrace {
  std::string id;
  std::vector<std::vector<uint32_t>> touched;  // [model][...] sorted unique

  ImageTrace() : touched(kNumModels) {}
};

// Presence histogram over a corpus: counts[model][index] = number of images
// that touched the bin at least once.
struct AccessHistogram {
  std::vector<std::vector<uint32_t>> counts;
  uint64_t images = 0;

  explicit AccessHistogram(const Registry& reg);
  void add(const ImageTrace& trace);
  void merge(const AccessHistogram& other);
};

// Histogram file: comma-separated text, one row per touched bin, stable
// order (registry order, ascending index). Untouched bins are implicit.
void save_histogram(const std::filesystem::path& p, const AccessHistogram& h,
                    const Registry& reg);
AccessHistogram load_histogram(const std::filesystem::path& p,
                               const Registry& reg);

// Flat per-model bin arrays, one BinState per index. Bins reset lazily via
// an epoch stamp; when tracing is armed, first touches are recorded into an
// ImageTrace.
class UnboundedStore {
 public:
  explicit UnboundedStore(const Registry& reg);

  void reset();
  void arm_trace(ImageTrace* trace) { trace_ = trace; }

  BinState* touch(uint16_t model, uint32_t index) {
    Slot& s = slots_[model][index];
    if (s.epoch != epoch_) {
      s.epoch = epoch_;
      s.bin = BinState{};
      if (trace_) trace_->touched[model].push_back(index);
    }
    return &s.bin;
  }

 private:
  struct Slot {
    BinState bin;
    uint32_t epoch = 0;
  };
  std::vector<std::vector<Slot>> slots_;
  uint32_t epoch_ = 1;
  ImageTrace* trace_ = nullptr;
};

struct OverflowRecord {
  uint16_t model = 0;
  uint32_t index = 0;
  uint32_t set = 0;
  std::string image;
};

// Set-associative store driven by a TableSet. Each set has `ways` slots
// holding {tag, bin}; a miss allocates the first free way and a full set
// reports overflow (returns nullptr and logs a record). Models marked
// kOriginal index their bins directly and cannot overflow.
class BoundedStore {
 public:
  BoundedStore(const TableSet& tables, const Registry& reg);

  void reset();  // clears valid flags and the overflow log
  void set_image_id(std::string id) { image_ = std::move(id); }

  BinState* touch(uint16_t model, uint32_t index);

  const std::vector<OverflowRecord>& overflows() const { return overflows_; }
  const TableSet& tables() const { return tables_; }

 private:
  struct Way {
    BinState bin;
    uint32_t tag = 0;
    uint32_t epoch = 0;
  };
  struct ModelState {
    const AllocationTable* table = nullptr;
    std::vector<Way> ways;  // depth entries (set-major) or index_range direct
  };

  const TableSet& tables_;
  std::vector<ModelState> models_;
  std::vector<OverflowRecord> overflows_;
  uint32_t epoch_ = 1;
  std::string image_;
};

}  // namespace lep
