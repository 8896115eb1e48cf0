#include "doctest.h"

#include <algorithm>
#include <array>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include <jpeglib.h>

#include "lep/codec.hpp"
#include "lep/context.hpp"
#include "lep/corpus.hpp"
#include "lep/jpeg.hpp"

namespace fs = std::filesystem;
using namespace lep;

namespace {

fs::path corpus_root() {
  const char* dir = std::getenv("LEP_CORPUS_DIR");
  REQUIRE_MESSAGE(dir != nullptr, "LEP_CORPUS_DIR is not set");
  fs::path p(dir);
  REQUIRE_MESSAGE(fs::is_directory(p / "stat"), "corpus fixture missing");
  return p;
}

std::string cli_path() {
  const char* cli = std::getenv("LEP_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "LEP_CLI is not set");
  return cli;
}

int run_cli(const std::string& args) {
  std::string cmd = "'" + cli_path() + "' " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

// ---- libjpeg as the reference decoder ----

struct JpegErr {
  jpeg_error_mgr mgr;
  jmp_buf env;
};

void on_error(j_common_ptr cinfo) {
  longjmp(reinterpret_cast<JpegErr*>(cinfo->err)->env, 1);
}

struct RefComponent {
  uint32_t wb = 0, hb = 0;
  int h = 1, v = 1;
  std::array<uint16_t, 64> quant_natural{};
  std::vector<std::array<int16_t, 64>> blocks;  // raster order, wb*hb
};

struct RefCoeffs {
  std::vector<RefComponent> comps;
};

RefCoeffs ref_coefficients(const std::vector<uint8_t>& data) {
  RefCoeffs out;
  jpeg_decompress_struct cinfo;
  JpegErr jerr;
  cinfo.err = jpeg_std_error(&jerr.mgr);
  jerr.mgr.error_exit = on_error;
  if (setjmp(jerr.env)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error("libjpeg rejected the file");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&cinfo, TRUE);
  jvirt_barray_ptr* arrays = jpeg_read_coefficients(&cinfo);
  for (int ci = 0; ci < cinfo.num_components; ++ci) {
    jpeg_component_info* info = &cinfo.comp_info[ci];
    RefComponent c;
    c.wb = info->width_in_blocks;
    c.hb = info->height_in_blocks;
    c.h = info->h_samp_factor;
    c.v = info->v_samp_factor;
    JQUANT_TBL* qt = cinfo.quant_tbl_ptrs[info->quant_tbl_no];
    for (int k = 0; k < 64; ++k) c.quant_natural[k] = qt->quantval[k];
    for (JDIMENSION by = 0; by < c.hb; ++by) {
      JBLOCKARRAY rows = (*cinfo.mem->access_virt_barray)(
          reinterpret_cast<j_common_ptr>(&cinfo), arrays[ci], by, 1, FALSE);
      for (JDIMENSION bx = 0; bx < c.wb; ++bx) {
        std::array<int16_t, 64> blk;
        for (int k = 0; k < 64; ++k) blk[k] = rows[0][bx][k];
        c.blocks.push_back(blk);
      }
    }
    out.comps.push_back(std::move(c));
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

struct Pixels {
  uint32_t w = 0, h = 0;
  int ch = 0;
  std::vector<uint8_t> data;
  bool operator==(const Pixels&) const = default;
};

Pixels ref_pixels(const std::vector<uint8_t>& data) {
  Pixels out;
  jpeg_decompress_struct cinfo;
  JpegErr jerr;
  cinfo.err = jpeg_std_error(&jerr.mgr);
  jerr.mgr.error_exit = on_error;
  if (setjmp(jerr.env)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error("libjpeg rejected the file");
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, data.data(), static_cast<unsigned long>(data.size()));
  jpeg_read_header(&cinfo, TRUE);
  jpeg_start_decompress(&cinfo);
  out.w = cinfo.output_width;
  out.h = cinfo.output_height;
  out.ch = cinfo.output_components;
  size_t stride = static_cast<size_t>(out.w) * out.ch;
  out.data.resize(stride * out.h);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.data.data() + stride * cinfo.output_scanline;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

std::vector<fs::path> oracle_files() {
  fs::path root = corpus_root();
  std::vector<fs::path> files = list_jpegs(root / "stat");
  REQUIRE(files.size() >= 10);
  files.resize(10);
  for (const char* name :
       {"gray.jpg", "s444.jpg", "optimized.jpg", "plain.jpg", "restart.jpg",
        "flat.jpg"}) {
    fs::path p = root / "extra" / name;
    if (fs::exists(p)) files.push_back(p);
  }
  return files;
}

}  // namespace

TEST_CASE("parsed coefficients agree with libjpeg") {
  for (const fs::path& f : oracle_files()) {
    INFO("file: " << f.string());
    std::vector<uint8_t> data = read_file(f);
    CoefficientImage mine = parse_jpeg(data);
    RefCoeffs ref = ref_coefficients(data);
    REQUIRE(mine.components.size() == ref.comps.size());
    for (size_t ci = 0; ci < ref.comps.size(); ++ci) {
      const Component& m = mine.components[ci];
      const RefComponent& r = ref.comps[ci];
      CHECK(m.h_samp == r.h);
      CHECK(m.v_samp == r.v);
      // Our grid is MCU padded, libjpeg reports the tight grid.
      REQUIRE(m.width_blocks >= r.wb);
      REQUIRE(m.height_blocks >= r.hb);
      const QuantTable* qt = nullptr;
      for (const auto& q : mine.quant_tables)
        if (q.id == m.quant_id) qt = &q;
      REQUIRE(qt != nullptr);
      for (int zz = 0; zz < 64; ++zz)
        CHECK(qt->values[zz] == r.quant_natural[kZigzagToRaster[zz]]);
      bool blocks_equal = true;
      for (uint32_t by = 0; by < r.hb && blocks_equal; ++by)
        for (uint32_t bx = 0; bx < r.wb && blocks_equal; ++bx)
          if (m.block(bx, by) !=
              r.blocks[static_cast<size_t>(by) * r.wb + bx])
            blocks_equal = false;
      CHECK(blocks_equal);
    }
  }
}

TEST_CASE("rebuilt files decode to identical pixels") {
  fs::path root = corpus_root();
  std::vector<fs::path> files = list_jpegs(root / "stat");
  REQUIRE(files.size() >= 5);
  files.resize(5);
  for (const char* name : {"gray.jpg", "restart.jpg"}) {
    fs::path p = root / "extra" / name;
    if (fs::exists(p)) files.push_back(p);
  }
  for (const fs::path& f : files) {
    INFO("file: " << f.string());
    std::vector<uint8_t> data = read_file(f);
    std::vector<uint8_t> rebuilt = rebuild_jpeg(parse_jpeg(data));
    CHECK(ref_pixels(data) == ref_pixels(rebuilt));
  }
}

TEST_CASE("parse and rebuild reach a fixed point") {
  for (const fs::path& f : oracle_files()) {
    INFO("file: " << f.string());
    CoefficientImage a = parse_jpeg(read_file(f));
    std::vector<uint8_t> first = rebuild_jpeg(a);
    CoefficientImage b = parse_jpeg(first);
    REQUIRE(a.components.size() == b.components.size());
    for (size_t c = 0; c < a.components.size(); ++c)
      CHECK(a.components[c].blocks == b.components[c].blocks);
    CHECK(rebuild_jpeg(b) == first);
  }
}

TEST_CASE("plain baseline files rebuild byte-for-byte") {
  fs::path p = corpus_root() / "extra" / "plain.jpg";
  REQUIRE(fs::exists(p));
  std::vector<uint8_t> data = read_file(p);
  CHECK(rebuild_jpeg(parse_jpeg(data)) == data);
}

TEST_CASE("unsupported profiles are refused cleanly") {
  fs::path p = corpus_root() / "extra" / "progressive.jpg";
  REQUIRE(fs::exists(p));
  std::vector<uint8_t> data = read_file(p);
  CHECK_THROWS_AS(parse_jpeg(data), UnsupportedFrame);
}

TEST_CASE("a flat image never reaches the coefficient models") {
  fs::path p = corpus_root() / "extra" / "flat.jpg";
  REQUIRE(fs::exists(p));
  CoefficientImage img = parse_jpeg(read_file(p));
  for (const auto& comp : img.components)
    for (const auto& blk : comp.blocks)
      for (int i = 1; i < 64; ++i) REQUIRE(blk[i] == 0);

  UnboundedStore store(registry());
  ImageTrace trace;
  store.arm_trace(&trace);
  encode_payload(img, store);
  CHECK(!trace.touched[kNz7x7Base].empty());
  for (uint16_t m = kExp7x7Base; m < kExp7x7Base + 11; ++m)
    CHECK(trace.touched[m].empty());
  for (uint16_t m = kExpEdgeBase; m < kExpEdgeBase + 11; ++m)
    CHECK(trace.touched[m].empty());
  for (uint16_t m = kRes7x7Base; m < kRes7x7Base + 10; ++m)
    CHECK(trace.touched[m].empty());
  for (uint16_t m = kResThresBase; m < kResThresBase + 8; ++m)
    CHECK(trace.touched[m].empty());
  CHECK(!trace.touched[kExpDcBase].empty());  // terminator bit of e(DC)
}

TEST_CASE("serial and parallel profiling are identical") {
  std::vector<fs::path> files = list_jpegs(corpus_root() / "stat");
  REQUIRE(files.size() >= 20);
  files.resize(20);

  CorpusProfile serial = profile_corpus_serial(files);
  CorpusProfile parallel = profile_corpus(files, 4);
  CHECK(serial.hist.images == parallel.hist.images);
  CHECK(serial.hist.counts == parallel.hist.counts);
  CHECK(serial.failures == parallel.failures);
  REQUIRE(serial.traces.size() == parallel.traces.size());
  for (size_t i = 0; i < serial.traces.size(); ++i) {
    CHECK(serial.traces[i].id == parallel.traces[i].id);
    CHECK(serial.traces[i].touched == parallel.traces[i].touched);
  }

  auto tmp = fs::temp_directory_path();
  save_histogram(tmp / "lep_hs.csv", serial.hist, registry());
  save_histogram(tmp / "lep_hp.csv", parallel.hist, registry());
  CHECK(read_file(tmp / "lep_hs.csv") == read_file(tmp / "lep_hp.csv"));
  fs::remove(tmp / "lep_hs.csv");
  fs::remove(tmp / "lep_hp.csv");
}

TEST_CASE("list_jpegs filters and sorts") {
  std::vector<fs::path> files = list_jpegs(corpus_root() / "extra");
  REQUIRE(!files.empty());
  CHECK(std::is_sorted(files.begin(), files.end()));
  for (const auto& f : files) {
    std::string ext = f.extension().string();
    CHECK((ext == ".jpg" || ext == ".jpeg"));
  }
  CHECK_THROWS_AS(list_jpegs(corpus_root() / "no_such_dir"), Error);
}

TEST_CASE("cli round trip") {
  fs::path root = corpus_root();
  fs::path tmp = fs::temp_directory_path() / "lep_cli_rt";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  std::string stat = (root / "stat").string();
  std::string hist = (tmp / "hist.csv").string();
  std::string tables = (tmp / "tables.lpt").string();

  CHECK(run_cli("profile --corpus '" + stat + "' --out '" + hist + "'") == 0);
  REQUIRE(fs::exists(hist));
  CHECK(fs::exists(hist + ".skips"));

  CHECK(run_cli("build --histogram '" + hist + "' --out '" + tables +
                "' --ways 32 --depth 1024") == 0);
  REQUIRE(fs::exists(tables));

  fs::path input = list_jpegs(root / "stat").front();
  std::string lep = (tmp / "a.lep").string();
  std::string lpcf = (tmp / "a.lpcf").string();
  std::string jpg = (tmp / "a.jpg").string();
  CHECK(run_cli("encode '" + input.string() + "' --tables '" + tables +
                "' --fallback --out '" + lep + "'") == 0);
  REQUIRE(fs::exists(lep));
  CHECK(fs::file_size(lep) < fs::file_size(input));

  CHECK(run_cli("decode '" + lep + "' --tables '" + tables + "' --out '" +
                lpcf + "' --jpeg '" + jpg + "'") == 0);
  REQUIRE(fs::exists(lpcf));
  REQUIRE(fs::exists(jpg));

  CoefficientImage original = parse_jpeg(read_file(input));
  CoefficientImage decoded = load_coefficients(read_file(lpcf));
  REQUIRE(original.components.size() == decoded.components.size());
  for (size_t c = 0; c < original.components.size(); ++c)
    CHECK(original.components[c].blocks == decoded.components[c].blocks);
  CHECK(read_file(jpg) == rebuild_jpeg(original));

  CHECK(run_cli("verify '" + input.string() + "' --tables '" + tables +
                "' --fallback") == 0);
  fs::remove_all(tmp);
}

TEST_CASE("cli analysis commands write their reports") {
  fs::path root = corpus_root();
  fs::path tmp = fs::temp_directory_path() / "lep_cli_an";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  std::string stat = (root / "stat").string();
  std::string test = (root / "test").string();

  std::string sweep_csv = (tmp / "sweep.csv").string();
  CHECK(run_cli("sweep --corpus '" + stat + "' --test-corpus '" + test +
                "' --out '" + sweep_csv +
                "' --models exp_7x7_0 --ways 8,32 --depths 8,64,512,4096") ==
        0);
  REQUIRE(fs::exists(sweep_csv));
  std::ifstream sf(sweep_csv);
  std::string line;
  REQUIRE(std::getline(sf, line));
  CHECK(line == "model,ways,depth,split,overflow_rate");
  size_t rows = 0;
  while (std::getline(sf, line))
    if (!line.empty()) ++rows;
  // Two splits, two ways, and the depth grid filtered to multiples of ways.
  CHECK(rows == 2 * (4 + 3));

  std::string report_dir = (tmp / "report").string();
  CHECK(run_cli("report --corpus '" + stat + "' --test-corpus '" + test +
                "' --out '" + report_dir + "' --ways 32") == 0);
  REQUIRE(fs::exists(report_dir + "/utilization.csv"));
  REQUIRE(fs::exists(report_dir + "/mindepth.csv"));
  std::ifstream uf(report_dir + "/utilization.csv");
  REQUIRE(std::getline(uf, line));
  CHECK(line == "model,used_mean,total,ratio");
  size_t urows = 0;
  while (std::getline(uf, line))
    if (!line.empty()) ++urows;
  CHECK(urows == kNumModels);
  std::ifstream mf(report_dir + "/mindepth.csv");
  REQUIRE(std::getline(mf, line));
  CHECK(line == "model,ways,min_depth,index_range,saving");
  size_t mrows = 0;
  while (std::getline(mf, line))
    if (!line.empty()) ++mrows;
  CHECK(mrows == 40);  // the four exp/res families
  fs::remove_all(tmp);
}

TEST_CASE("cli failure modes map to distinct exit codes") {
  fs::path root = corpus_root();
  fs::path tmp = fs::temp_directory_path() / "lep_cli_err";
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  std::string stat = (root / "stat").string();
  std::string hist = (tmp / "hist.csv").string();
  std::string big = (tmp / "big.lpt").string();
  std::string other = (tmp / "other.lpt").string();
  std::string tiny = (tmp / "tiny.lpt").string();

  REQUIRE(run_cli("profile --corpus '" + stat + "' --out '" + hist + "'") == 0);
  REQUIRE(run_cli("build --histogram '" + hist + "' --out '" + big +
                  "' --ways 32 --depth 8192 --ma-ratio 1000000") == 0);
  REQUIRE(run_cli("build --histogram '" + hist + "' --out '" + other +
                  "' --ways 32 --depth 4096 --ma-ratio 1000000") == 0);
  REQUIRE(run_cli("build --histogram '" + hist + "' --out '" + tiny +
                  "' --ways 4 --depth 4 --ma-ratio 1000000") == 0);

  // Find an image the big tables hold without overflow, so the container
  // comes out in bounded mode.
  std::vector<fs::path> files = list_jpegs(root / "stat");
  std::string lep = (tmp / "x.lep").string();
  std::string bounded_input;
  for (size_t i = 0; i < files.size() && i < 10; ++i) {
    int rc = run_cli("encode '" + files[i].string() + "' --tables '" + big +
                     "' --out '" + lep + "'");
    if (rc == 0) {
      bounded_input = files[i].string();
      break;
    }
    REQUIRE(rc == kExitOverflow);
  }
  REQUIRE(!bounded_input.empty());
  CHECK(read_container(read_file(lep)).mode == ContainerMode::kBounded);

  std::string out = (tmp / "x.lpcf").string();
  CHECK(run_cli("decode '" + lep + "' --tables '" + big + "' --out '" + out +
                "'") == 0);
  CHECK(run_cli("decode '" + lep + "' --tables '" + other + "' --out '" + out +
                "'") == kExitTableMismatch);
  CHECK(run_cli("decode '" + lep + "' --out '" + out + "'") ==
        kExitTableMismatch);

  std::vector<uint8_t> blob = read_file(lep);
  blob[blob.size() / 2] ^= 0x10;
  write_file(tmp / "bad.lep", blob);
  CHECK(run_cli("decode '" + (tmp / "bad.lep").string() + "' --tables '" + big +
                "' --out '" + out + "'") == kExitCorruptStream);

  fs::path progressive = root / "extra" / "progressive.jpg";
  REQUIRE(fs::exists(progressive));
  CHECK(run_cli("encode '" + progressive.string() + "' --out '" + lep + "'") ==
        kExitUnsupportedFrame);

  // Cramped tables without fallback: overflow aborts and lands in the log.
  std::string ovf = (tmp / "overflow.csv").string();
  CHECK(run_cli("encode '" + bounded_input + "' --tables '" + tiny +
                "' --out '" + lep + "' --overflow-log '" + ovf + "'") ==
        kExitOverflow);
  REQUIRE(fs::exists(ovf));
  std::ifstream f(ovf);
  std::string header, row;
  REQUIRE(std::getline(f, header));
  CHECK(header == "image,model,flat_index,set");
  CHECK(std::getline(f, row));
  fs::remove_all(tmp);
}
