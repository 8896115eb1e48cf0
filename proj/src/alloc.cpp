#include "lep/alloc.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lep/binio.hpp"
#include "lep/coeff_image.hpp"
#include "lep/registry.hpp"
#include "lep/store.hpp"

namespace lep {

std::vector<double> build_weights(std::span<const double> p, uint32_t depth) {
  if (depth == 0) throw RangeError("depth must be positive");
  double mass = 0;
  size_t active = 0;
  for (double v : p) {
    if (v < 0 || !std::isfinite(v))
      throw InvalidProbability("negative or non-finite probability");
    mass += v;
    active += v > 0;
  }
  if (active == 0) throw InvalidProbability("all-zero probability vector");

  const double cap = 1.0 / depth;
  std::vector<double> w(p.size());

  // With spare capacity the iteration has no fixed point of unit mass; every
  // active entry just takes a full slot.
  if (active <= depth) {
    for (size_t i = 0; i < p.size(); ++i) w[i] = p[i] > 0 ? cap : 0.0;
    return w;
  }

  for (size_t i = 0; i < p.size(); ++i) w[i] = p[i] / mass;

  for (int iter = 0; iter < kWeightMaxIters; ++iter) {
    double max_w = *std::max_element(w.begin(), w.end());
    if (max_w <= cap * (1.0 + kWeightSlack)) break;
    double sum = 0;
    for (double& v : w) {
      v = std::min(v, cap);
      sum += v;
    }
    for (double& v : w) v /= sum;
  }

  // Exact clip, then restore unit mass through the uncapped entries.
  double capped_mass = 0, uncapped_mass = 0;
  for (double& v : w) {
    if (v >= cap) {
      v = cap;
      capped_mass += cap;
    } else {
      uncapped_mass += v;
    }
  }
  if (uncapped_mass > 0) {
    double scale = (1.0 - capped_mass) / uncapped_mass;
    for (double& v : w)
      if (v < cap) v *= scale;
  }
  return w;
}

std::vector<double> build_hash(std::span<const double> w, uint32_t depth) {
  std::vector<double> h(w.size());
  double acc = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    acc += w[i];
    h[i] = acc * depth;
  }
  return h;
}

std::vector<uint32_t> derive_boundaries(std::span<const double> h,
                                        uint32_t depth, uint32_t ways) {
  if (ways == 0) throw RangeError("ways must be positive");
  if (depth % ways != 0)
    throw IndivisibleDepth("depth is not a multiple of ways");
  const uint32_t sets = depth / ways;
  const uint32_t range = static_cast<uint32_t>(h.size());
  std::vector<uint32_t> bounds;
  bounds.reserve(sets ? sets - 1 : 0);
  uint32_t idx = 0;
  for (uint32_t k = 1; k < sets; ++k) {
    const double target = static_cast<double>(k) * ways - 1e-9;
    // interval start of index i is h[i-1]
    while (idx < range && (idx == 0 ? 0.0 : h[idx - 1]) < target) ++idx;
    bounds.push_back(idx);  // == range when the hash never reaches target
  }
  return bounds;
}

int tag_width_for(uint32_t width) {
  if (width <= 1) return 0;
  int bits = 0;
  uint32_t v = width - 1;
  while (v) {
    ++bits;
    v >>= 1;
  }
  return bits;
}

uint32_t AllocationTable::set_of(uint32_t index) const {
  if (kind == Kind::kOriginal) return index;
  // number of boundaries <= index
  return static_cast<uint32_t>(
      std::upper_bound(bounds.begin(), bounds.end(), index) - bounds.begin());
}

uint32_t AllocationTable::set_start(uint32_t set) const {
  if (kind == Kind::kOriginal) return set;
  return set == 0 ? 0 : bounds[set - 1];
}

uint32_t AllocationTable::set_width(uint32_t set) const {
  if (kind == Kind::kOriginal) return 1;
  uint32_t next = set + 1 <= bounds.size() ? bounds[set] : index_range;
  return next - set_start(set);
}

AllocationTable build_allocation(const std::string& model_name,
                                 std::span<const uint32_t> counts,
                                 uint64_t images, uint32_t index_range,
                                 uint32_t depth, uint32_t ways) {
  if (counts.size() != index_range)
    throw RangeError("count vector does not match index range");
  if (images == 0) throw EmptyCorpus("histogram covers no images");

  AllocationTable t;
  t.model = model_name;
  t.kind = AllocationTable::Kind::kOptimized;
  t.index_range = index_range;
  t.depth = depth;
  t.ways = ways;

  std::vector<double> p(index_range);
  uint64_t total = 0;
  for (uint32_t c : counts) total += c;
  if (depth >= index_range || total == 0) {
    // Capacity covers every index, or nothing was ever observed: degrade to
    // a uniform grid. In the first case the table can never overflow; in the
    // second there is no information to shape the allocation with.
    std::fill(p.begin(), p.end(), 1.0);
  } else {
    for (uint32_t i = 0; i < index_range; ++i)
      p[i] = static_cast<double>(counts[i]) / static_cast<double>(images);
  }
  t.weights = build_weights(p, depth);
  t.hash = build_hash(t.weights, depth);
  t.bounds = derive_boundaries(t.hash, depth, ways);
  return t;
}

namespace {

AllocationTable original_table(const std::string& name, uint32_t range) {
  AllocationTable t;
  t.model = name;
  t.kind = AllocationTable::Kind::kOriginal;
  t.index_range = range;
  t.depth = range;
  t.ways = 1;
  return t;
}

std::vector<uint8_t> record_section(const TableSet& ts) {
  ByteWriter w;
  w.u16(static_cast<uint16_t>(ts.models.size()));
  for (const AllocationTable& t : ts.models) {
    w.str(t.model);
    w.u8(static_cast<uint8_t>(t.kind));
    w.u32(t.index_range);
    w.u32(t.depth);
    w.u32(t.ways);
    w.u32(static_cast<uint32_t>(t.bounds.size()));
    for (uint32_t b : t.bounds) w.u32(b);
  }
  return w.take();
}

void validate_table(const AllocationTable& t, const ModelInfo& info) {
  if (t.index_range != info.bins)
    throw InvariantViolation("index range mismatch for " + t.model);
  if (t.kind == AllocationTable::Kind::kOriginal) {
    if (t.depth != t.index_range || t.ways != 1 || !t.bounds.empty())
      throw InvariantViolation("malformed direct table for " + t.model);
    return;
  }
  if (t.ways == 0 || t.depth == 0)
    throw InvariantViolation("empty table geometry for " + t.model);
  if (t.depth % t.ways != 0)
    throw InvariantViolation("depth not divisible by ways for " + t.model);
  if (t.bounds.size() != t.depth / t.ways - 1)
    throw InvariantViolation("boundary count mismatch for " + t.model);
  uint32_t prev = 0;
  for (uint32_t b : t.bounds) {
    if (b < prev || b > t.index_range)
      throw InvariantViolation("boundary order violated for " + t.model);
    prev = b;
  }
}

}  // namespace

TableSet assemble_tables(const AccessHistogram& hist, const Registry& reg,
                         std::span<const uint32_t> depths,
                         const BuildConfig& cfg) {
  if (depths.size() != reg.models().size())
    throw RangeError("depth list does not match model count");
  TableSet ts;
  ts.models.reserve(reg.models().size());
  for (size_t m = 0; m < reg.models().size(); ++m) {
    const ModelInfo& info = reg.models()[m];
    const auto& counts = hist.counts[m];
    bool any_active =
        std::any_of(counts.begin(), counts.end(), [](uint32_t c) { return c > 0; });
    uint32_t depth = depths[m];
    // The break-even rule: a bounded store only pays off while depth stays
    // under ma_ratio of the direct range. Cold models also stay direct.
    bool optimized = any_active && depth > 0 &&
                     static_cast<double>(depth) / info.bins < cfg.ma_ratio;
    if (!optimized) {
      ts.models.push_back(original_table(info.name, info.bins));
      continue;
    }
    if (depth % cfg.ways != 0)
      throw IndivisibleDepth("depth for " + info.name +
                             " is not a multiple of ways");
    ts.models.push_back(build_allocation(info.name, counts, hist.images,
                                         info.bins, depth, cfg.ways));
  }
  ts.content_hash = crc32_of(record_section(ts));
  return ts;
}

std::vector<uint8_t> serialize_tables(const TableSet& ts) {
  std::vector<uint8_t> records = record_section(ts);
  ByteWriter w;
  w.bytes("LPTB", 4);
  w.u16(kTablesVersion);
  w.bytes(records.data(), records.size());
  w.u32(crc32_of(records));
  return w.take();
}

TableSet parse_tables(std::span<const uint8_t> data, const Registry& reg) {
  ByteReader r(data);
  auto magic = r.bytes(4);
  if (std::string(magic.begin(), magic.end()) != "LPTB")
    throw MalformedStream("not a table file");
  if (r.u16() != kTablesVersion)
    throw FormatVersionMismatch("unsupported table file version");
  const uint8_t* records_begin = r.cursor();

  TableSet ts;
  uint16_t n = r.u16();
  if (n != reg.models().size())
    throw InvariantViolation("table file model count mismatch");
  for (uint16_t m = 0; m < n; ++m) {
    AllocationTable t;
    t.model = r.str();
    uint8_t kind = r.u8();
    if (kind > 1) throw MalformedStream("bad table kind");
    t.kind = static_cast<AllocationTable::Kind>(kind);
    t.index_range = r.u32();
    t.depth = r.u32();
    t.ways = r.u32();
    uint32_t nb = r.u32();
    t.bounds.reserve(nb);
    for (uint32_t i = 0; i < nb; ++i) t.bounds.push_back(r.u32());
    const ModelInfo& info = reg.models()[m];
    if (t.model != info.name)
      throw InvariantViolation("model name mismatch: " + t.model);
    validate_table(t, info);
    ts.models.push_back(std::move(t));
  }
  size_t record_len = static_cast<size_t>(r.cursor() - records_begin);
  uint32_t stored = r.u32();
  uint32_t computed = crc32_of(records_begin, record_len);
  if (stored != computed)
    throw ChecksumMismatch("table file checksum mismatch");
  ts.content_hash = computed;
  return ts;
}

void save_tables(const std::filesystem::path& p, const TableSet& ts) {
  std::vector<uint8_t> data = serialize_tables(ts);
  write_file(p, data);
}

TableSet load_tables(const std::filesystem::path& p, const Registry& reg) {
  std::vector<uint8_t> data = read_file(p);
  return parse_tables(data, reg);
}

}  // namespace lep
