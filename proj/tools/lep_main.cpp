#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "lep/analysis.hpp"
#include "lep/codec.hpp"
#include "lep/corpus.hpp"
#include "lep/errors.hpp"
#include "lep/jpeg.hpp"

namespace fs = std::filesystem;
using namespace lep;

namespace {

CorpusProfile run_profile(const std::string& dir, int jobs, bool serial,
                          bool quiet = false) {
  auto files = list_jpegs(dir);
  CorpusProfile p =
      serial ? profile_corpus_serial(files) : profile_corpus(files, jobs);
  if (!quiet)
    for (const auto& f : p.failures) std::cerr << "skip: " << f << "\n";
  if (p.traces.empty())
    throw EmptyCorpus("no decodable baseline JPEG in " + dir);
  return p;
}

void append_overflow_log(const std::string& path,
                         const std::vector<OverflowRecord>& recs) {
  if (path.empty() || recs.empty()) return;
  bool fresh = !fs::exists(path) || fs::file_size(path) == 0;
  std::ofstream f(path, std::ios::app);
  if (!f) throw Error("cannot open " + path + " for appending");
  if (fresh) f << "image,model,flat_index,set\n";
  const Registry& reg = registry();
  for (const auto& r : recs)
    f << r.image << ',' << reg.model(r.model).name << ',' << r.index << ','
      << r.set << '\n';
  if (!f.flush()) throw Error("failed writing " + path);
}

// Boundary refresh input: every distinct (image, model, index) row becomes
// one extra presence count; the image total grows by the number of distinct
// images in the log.
void merge_overflow_log(AccessHistogram& hist, const std::string& path,
                        const Registry& reg) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  std::string line;
  if (!std::getline(f, line) || line != "image,model,flat_index,set")
    throw MalformedStream("bad overflow log header in " + path);
  std::set<std::string> images;
  std::set<std::tuple<std::string, uint16_t, uint32_t>> seen;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string image, model, index_s, set_s;
    if (!std::getline(is, image, ',') || !std::getline(is, model, ',') ||
        !std::getline(is, index_s, ',') || !std::getline(is, set_s))
      throw MalformedStream("bad overflow log row: " + line);
    uint16_t m = reg.id_of(model);
    uint32_t idx = static_cast<uint32_t>(std::stoul(index_s));
    if (idx >= reg.model(m).bins)
      throw RangeError("overflow log index out of range: " + line);
    if (seen.insert({image, m, idx}).second) ++hist.counts[m][idx];
    images.insert(image);
  }
  hist.images += images.size();
}

std::optional<TableSet> maybe_load_tables(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_tables(path, registry());
}

std::vector<uint16_t> parse_model_list(const std::vector<std::string>& names) {
  const Registry& reg = registry();
  std::vector<uint16_t> out;
  for (const auto& n : names) out.push_back(reg.id_of(n));
  return out;
}

std::vector<uint16_t> family_models(const std::string& prefix) {
  const Registry& reg = registry();
  std::vector<uint16_t> out;
  for (uint16_t m = 0; m < kNumModels; ++m)
    if (reg.model(m).name.rfind(prefix, 0) == 0) out.push_back(m);
  return out;
}

std::string compare_images(const CoefficientImage& a,
                           const CoefficientImage& b) {
  if (a.components.size() != b.components.size()) return "component count";
  for (size_t c = 0; c < a.components.size(); ++c) {
    const Component& x = a.components[c];
    const Component& y = b.components[c];
    if (x.width_blocks != y.width_blocks || x.height_blocks != y.height_blocks ||
        x.h_samp != y.h_samp || x.v_samp != y.v_samp ||
        x.quant_id != y.quant_id)
      return "component " + std::to_string(c) + " geometry";
    for (size_t i = 0; i < x.blocks.size(); ++i)
      if (x.blocks[i] != y.blocks[i])
        return "component " + std::to_string(c) + " block " + std::to_string(i);
  }
  if (a.quant_tables.size() != b.quant_tables.size()) return "quant table count";
  for (size_t i = 0; i < a.quant_tables.size(); ++i)
    if (a.quant_tables[i].id != b.quant_tables[i].id ||
        a.quant_tables[i].values != b.quant_tables[i].values)
      return "quant table " + std::to_string(i);
  if (a.header_blob != b.header_blob) return "header blob";
  return {};
}

// ---- commands ----

struct ProfileOpts {
  std::string corpus, out;
  int jobs = 0;
  bool serial = false;
};

int cmd_profile(const ProfileOpts& o) {
  CorpusProfile p = run_profile(o.corpus, o.jobs, o.serial);
  save_histogram(o.out, p.hist, registry());
  std::ofstream skips(o.out + ".skips");
  for (const auto& f : p.failures) skips << f << "\n";
  std::cout << "profiled " << p.traces.size() << " images ("
            << p.failures.size() << " skipped) -> " << o.out << "\n";
  return kExitOk;
}

struct BuildOpts {
  std::string histogram, out, policy = "fixed";
  std::string corpus, test_corpus, merge_log;
  uint32_t ways = 32;
  uint32_t depth = 0;
  double ma_ratio = 0.3;
  int jobs = 0;
};

int cmd_build(const BuildOpts& o) {
  const Registry& reg = registry();
  AccessHistogram hist = load_histogram(o.histogram, reg);
  if (!o.merge_log.empty()) merge_overflow_log(hist, o.merge_log, reg);

  BuildConfig cfg;
  cfg.ways = o.ways;
  cfg.ma_ratio = o.ma_ratio;
  std::vector<uint32_t> depths(kNumModels, 0);
  if (o.policy == "fixed") {
    cfg.policy = DepthPolicy::kFixed;
    if (o.depth == 0 || o.depth % o.ways)
      throw RangeError("--depth must be a positive multiple of --ways");
    cfg.fixed_depth = o.depth;
    std::fill(depths.begin(), depths.end(), o.depth);
  } else if (o.policy == "min-zero-overflow") {
    cfg.policy = DepthPolicy::kMinZeroOverflow;
    if (o.corpus.empty())
      throw RangeError("--depth-policy min-zero-overflow needs --corpus");
    CorpusProfile stat = run_profile(o.corpus, o.jobs, false);
    CorpusProfile test(reg);
    bool both = !o.test_corpus.empty();
    if (both) test = run_profile(o.test_corpus, o.jobs, false);
    for (uint16_t m = 0; m < kNumModels; ++m)
      depths[m] = min_depth(stat.traces, test.traces, hist, reg, m, o.ways,
                            both);
  } else {
    throw RangeError("unknown depth policy: " + o.policy);
  }

  TableSet ts = assemble_tables(hist, reg, depths, cfg);
  save_tables(o.out, ts);
  size_t optimized = 0;
  for (const auto& t : ts.models)
    if (t.kind == AllocationTable::Kind::kOptimized) ++optimized;
  std::cout << "tables " << std::hex << ts.content_hash << std::dec << ": "
            << optimized << " optimized, " << (ts.models.size() - optimized)
            << " original -> " << o.out << "\n";
  return kExitOk;
}

struct EncodeOpts {
  std::string input, out, tables, overflow_log;
  bool fallback = false;
};

int cmd_encode(const EncodeOpts& o) {
  std::vector<uint8_t> jpeg = read_file(o.input);
  CoefficientImage img = parse_jpeg(jpeg);
  std::optional<TableSet> ts = maybe_load_tables(o.tables);
  std::vector<OverflowRecord> recs;
  std::vector<uint8_t> packed;
  try {
    packed = encode_to_container(img, ts ? &*ts : nullptr, o.fallback, &recs,
                                 fs::path(o.input).filename().string());
  } catch (...) {
    append_overflow_log(o.overflow_log, recs);
    throw;
  }
  append_overflow_log(o.overflow_log, recs);
  write_file(o.out, packed);
  ContainerMode mode = read_container(packed).mode;
  std::cout << "mode="
            << (mode == ContainerMode::kBounded ? "bounded" : "fallback")
            << " original=" << jpeg.size() << " compressed=" << packed.size()
            << " ratio="
            << static_cast<double>(packed.size()) /
                   static_cast<double>(jpeg.size())
            << "\n";
  return kExitOk;
}

struct DecodeOpts {
  std::string input, out, tables, jpeg_out;
};

int cmd_decode(const DecodeOpts& o) {
  std::vector<uint8_t> data = read_file(o.input);
  std::optional<TableSet> ts = maybe_load_tables(o.tables);
  CoefficientImage img = decode_from_container(data, ts ? &*ts : nullptr);
  write_file(o.out, dump_coefficients(img));
  if (!o.jpeg_out.empty()) write_file(o.jpeg_out, rebuild_jpeg(img));
  std::cout << "decoded " << img.total_blocks() << " blocks -> " << o.out
            << "\n";
  return kExitOk;
}

struct VerifyOpts {
  std::string input, tables;
  bool fallback = false;
};

int cmd_verify(const VerifyOpts& o) {
  std::vector<uint8_t> jpeg = read_file(o.input);
  CoefficientImage img = parse_jpeg(jpeg);
  std::optional<TableSet> ts = maybe_load_tables(o.tables);
  std::vector<uint8_t> packed =
      encode_to_container(img, ts ? &*ts : nullptr, o.fallback, nullptr,
                          fs::path(o.input).filename().string());
  CoefficientImage back = decode_from_container(packed, ts ? &*ts : nullptr);
  std::string mismatch = compare_images(img, back);
  ContainerMode mode = read_container(packed).mode;
  if (!mismatch.empty()) {
    std::cout << "FAIL " << o.input << ": mismatch at " << mismatch << "\n";
    return kExitFailure;
  }
  std::cout << "PASS original=" << jpeg.size() << " compressed=" << packed.size()
            << " ratio="
            << static_cast<double>(packed.size()) /
                   static_cast<double>(jpeg.size())
            << " mode="
            << (mode == ContainerMode::kBounded ? "bounded" : "fallback")
            << "\n";
  return kExitOk;
}

struct SweepOpts {
  std::string corpus, test_corpus, out;
  std::vector<std::string> models = {"exp_7x7_0", "exp_7x7_1", "exp_7x7_2"};
  std::vector<uint32_t> ways = {8, 16, 32, 64};
  std::vector<uint32_t> depths = {8,    16,   32,   64,   128,  256,  512,
                                  1024, 2048, 4096, 8192, 16384};
  int jobs = 0;
};

int cmd_sweep(const SweepOpts& o) {
  CorpusProfile stat = run_profile(o.corpus, o.jobs, false);
  CorpusProfile test(registry());
  if (!o.test_corpus.empty()) test = run_profile(o.test_corpus, o.jobs, false);
  SweepResult res =
      sweep(stat.traces, test.traces, stat.hist, registry(),
            parse_model_list(o.models), o.ways, o.depths);
  write_sweep_csv(o.out, res.rows);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "sweep: " << res.rows.size() << " rows -> " << o.out << "\n";
  return kExitOk;
}

struct ReportOpts {
  std::string corpus, test_corpus, out = ".";
  uint32_t ways = 32;
  int jobs = 0;
};

int cmd_report(const ReportOpts& o) {
  const Registry& reg = registry();
  CorpusProfile stat = run_profile(o.corpus, o.jobs, false);
  CorpusProfile test(reg);
  bool both = !o.test_corpus.empty();
  if (both) test = run_profile(o.test_corpus, o.jobs, false);

  fs::create_directories(o.out);
  auto util = utilization(stat.hist, reg);
  write_utilization_csv(fs::path(o.out) / "utilization.csv", util);

  std::vector<uint16_t> models;
  for (const char* fam : {"exp_7x7_", "exp_edge_", "res_7x7_", "res_thres_"})
    for (uint16_t m : family_models(fam)) models.push_back(m);
  std::vector<MinDepthRow> rows;
  uint64_t total_depth = 0, total_range = 0;
  for (uint16_t m : models) {
    MinDepthRow row;
    row.model = reg.model(m).name;
    row.ways = o.ways;
    row.index_range = reg.model(m).bins;
    row.depth = min_depth(stat.traces, test.traces, stat.hist, reg, m, o.ways,
                          both);
    row.saving = 1.0 - static_cast<double>(row.depth) / row.index_range;
    total_depth += row.depth;
    total_range += row.index_range;
    rows.push_back(std::move(row));
  }
  write_mindepth_csv(fs::path(o.out) / "mindepth.csv", rows);
  std::cout << "combined saving over " << rows.size() << " models: "
            << 1.0 - static_cast<double>(total_depth) /
                         static_cast<double>(total_range)
            << " -> " << o.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lossless JPEG recompression with bounded probability stores"};
  app.require_subcommand(1);

  ProfileOpts po;
  auto* profile = app.add_subcommand(
      "profile", "Collect the per-bin access histogram of a corpus");
  profile->add_option("--corpus", po.corpus, "Directory of baseline JPEGs")
      ->required();
  profile->add_option("--out", po.out, "Histogram file to write")->required();
  profile->add_option("--jobs", po.jobs, "Worker threads (0 = hardware)");
  profile->add_flag("--serial", po.serial, "Force the serial reference path");

  BuildOpts bo;
  auto* build = app.add_subcommand(
      "build", "Derive set-associative tables from a histogram");
  build->add_option("--histogram", bo.histogram, "Histogram from `profile`")
      ->required();
  build->add_option("--out", bo.out, "Tables file to write")->required();
  build->add_option("--ways", bo.ways, "Associativity N");
  build->add_option("--depth", bo.depth, "Fixed depth budget per model");
  build->add_option("--depth-policy", bo.policy,
                    "fixed | min-zero-overflow (default fixed)");
  build->add_option("--ma-ratio", bo.ma_ratio,
                    "Depth/range break-even ratio (default 0.3)");
  build->add_option("--corpus", bo.corpus,
                    "Corpus dir (needed by min-zero-overflow)");
  build->add_option("--test-corpus", bo.test_corpus,
                    "Held-out corpus also kept overflow-free");
  build->add_option("--merge-overflow-log", bo.merge_log,
                    "Fold an encode overflow log into the histogram");
  build->add_option("--jobs", bo.jobs, "Worker threads (0 = hardware)");

  EncodeOpts eo;
  auto* encode =
      app.add_subcommand("encode", "Compress one JPEG into a container");
  encode->add_option("input", eo.input, "JPEG file")->required();
  encode->add_option("--out", eo.out, "Container file to write")->required();
  encode->add_option("--tables", eo.tables, "Tables file for bounded mode");
  encode->add_flag("--fallback", eo.fallback,
                   "Re-encode unbounded when a set overflows");
  encode->add_option("--overflow-log", eo.overflow_log,
                     "Append overflow records here");

  DecodeOpts dco;
  auto* decode =
      app.add_subcommand("decode", "Expand a container back to coefficients");
  decode->add_option("input", dco.input, "Container file")->required();
  decode->add_option("--out", dco.out, "Coefficient dump to write")->required();
  decode->add_option("--tables", dco.tables, "Tables used at encode time");
  decode->add_option("--jpeg", dco.jpeg_out, "Also rebuild the JPEG here");

  VerifyOpts vo;
  auto* verify =
      app.add_subcommand("verify", "Round-trip one JPEG and compare");
  verify->add_option("input", vo.input, "JPEG file")->required();
  verify->add_option("--tables", vo.tables, "Tables file for bounded mode");
  verify->add_flag("--fallback", vo.fallback,
                   "Re-encode unbounded when a set overflows");

  SweepOpts so;
  auto* sweepc = app.add_subcommand(
      "sweep", "Overflow-rate grid over ways and depth");
  sweepc->add_option("--corpus", so.corpus, "Statistical corpus")->required();
  sweepc->add_option("--test-corpus", so.test_corpus, "Held-out corpus");
  sweepc->add_option("--out", so.out, "CSV to write")->required();
  sweepc->add_option("--models", so.models, "Model names")->delimiter(',');
  sweepc->add_option("--ways", so.ways, "Associativities")->delimiter(',');
  sweepc->add_option("--depths", so.depths, "Depth grid")->delimiter(',');
  sweepc->add_option("--jobs", so.jobs, "Worker threads (0 = hardware)");

  ReportOpts ro;
  auto* report = app.add_subcommand(
      "report", "Utilization and minimum-depth CSVs for a corpus");
  report->add_option("--corpus", ro.corpus, "Statistical corpus")->required();
  report->add_option("--test-corpus", ro.test_corpus, "Held-out corpus");
  report->add_option("--out", ro.out, "Output directory (default .)");
  report->add_option("--ways", ro.ways, "Associativity N (default 32)");
  report->add_option("--jobs", ro.jobs, "Worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
    if (profile->parsed()) return cmd_profile(po);
    if (build->parsed()) return cmd_build(bo);
    if (encode->parsed()) return cmd_encode(eo);
    if (decode->parsed()) return cmd_decode(dco);
    if (verify->parsed()) return cmd_verify(vo);
    if (sweepc->parsed()) return cmd_sweep(so);
    if (report->parsed()) return cmd_report(ro);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
