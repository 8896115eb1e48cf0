#include "lep/store.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "lep/errors.hpp"

namespace lep {

AccessHistogram::AccessHistogram(const Registry& reg) {
  counts.reserve(reg.models().size());
  for (const ModelInfo& m : reg.models()) counts.emplace_back(m.bins, 0u);
}

void AccessHistogram::add(const ImageTrace& trace) {
  for (size_t m = 0; m < counts.size(); ++m)
    for (uint32_t idx : trace.touched[m]) {
      if (idx >= counts[m].size())
        throw RangeError("trace index out of model range");
      ++counts[m][idx];
    }
  ++images;
}

void AccessHistogram::merge(const AccessHistogram& other) {
  if (other.counts.size() != counts.size())
    throw RangeError("histogram shape mismatch");
  for (size_t m = 0; m < counts.size(); ++m) {
    if (other.counts[m].size() != counts[m].size())
      throw RangeError("histogram shape mismatch");
    for (size_t i = 0; i < counts[m].size(); ++i)
      counts[m][i] += other.counts[m][i];
  }
  images += other.images;
}

void save_histogram(const std::filesystem::path& p, const AccessHistogram& h,
                    const Registry& reg) {
  std::ofstream f(p);
  if (!f) throw Error("cannot open " + p.string() + " for writing");
  f << "model,flat_index,count,images_total\n";
  for (size_t m = 0; m < h.counts.size(); ++m) {
    const std::string& name = reg.models()[m].name;
    for (size_t i = 0; i < h.counts[m].size(); ++i)
      if (h.counts[m][i])
        f << name << ',' << i << ',' << h.counts[m][i] << ',' << h.images
          << '\n';
  }
  if (!f.flush()) throw Error("failed writing " + p.string());
}

AccessHistogram load_histogram(const std::filesystem::path& p,
                               const Registry& reg) {
  std::ifstream f(p);
  if (!f) throw Error("cannot open " + p.string());
  AccessHistogram h(reg);
  std::string line;
  if (!std::getline(f, line) || line != "model,flat_index,count,images_total")
    throw MalformedStream("bad histogram header in " + p.string());
  uint64_t images = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    size_t c1 = line.find(',');
    size_t c2 = line.find(',', c1 + 1);
    size_t c3 = line.find(',', c2 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos ||
        c3 == std::string::npos)
      throw MalformedStream("bad histogram row: " + line);
    uint16_t model = reg.id_of(line.substr(0, c1));
    auto parse_u64 = [&](size_t from, size_t to) {
      uint64_t v = 0;
      auto res = std::from_chars(line.data() + from, line.data() + to, v);
      if (res.ec != std::errc() || res.ptr != line.data() + to)
        throw MalformedStream("bad histogram number: " + line);
      return v;
    };
    uint64_t idx = parse_u64(c1 + 1, c2);
    uint64_t count = parse_u64(c2 + 1, c3);
    uint64_t imgs = parse_u64(c3 + 1, line.size());
    if (idx >= h.counts[model].size())
      throw RangeError("histogram index out of model range");
    h.counts[model][idx] = static_cast<uint32_t>(count);
    if (images != 0 && imgs != images)
      throw MalformedStream("inconsistent images_total in " + p.string());
    images = imgs;
  }
  h.images = images;
  return h;
}

UnboundedStore::UnboundedStore(const Registry& reg) {
  slots_.reserve(reg.models().size());
  for (const ModelInfo& m : reg.models()) slots_.emplace_back(m.bins);
}

void UnboundedStore::reset() { ++epoch_; }

BoundedStore::BoundedStore(const TableSet& tables, const Registry& reg)
    : tables_(tables) {
  if (tables.models.size() != reg.models().size())
    throw InvariantViolation("table set does not cover the registry");
  models_.resize(tables.models.size());
  for (size_t m = 0; m < tables.models.size(); ++m) {
    models_[m].table = &tables.models[m];
    models_[m].ways.resize(tables.models[m].depth);
  }
}

void BoundedStore::reset() {
  ++epoch_;
  overflows_.clear();
}

BinState* BoundedStore::touch(uint16_t model, uint32_t index) {
  ModelState& ms = models_[model];
  const AllocationTable& t = *ms.table;
  if (index >= t.index_range) throw RangeError("bin index out of range");

  if (t.kind == AllocationTable::Kind::kOriginal) {
    Way& w = ms.ways[index];
    if (w.epoch != epoch_) {
      w.epoch = epoch_;
      w.bin = BinState{};
    }
    return &w.bin;
  }

  uint32_t set = t.set_of(index);
  uint32_t tag = index - t.set_start(set);
  Way* base = ms.ways.data() + static_cast<size_t>(set) * t.ways;
  for (uint32_t i = 0; i < t.ways; ++i) {
    Way& w = base[i];
    if (w.epoch != epoch_) {  // first free way: allocate
      w.epoch = epoch_;
      w.tag = tag;
      w.bin = BinState{};
      return &w.bin;
    }
    if (w.tag == tag) return &w.bin;
  }
  overflows_.push_back({model, index, set, image_});
  return nullptr;
}

}  // namespace lep
