#include "lep/corpus.hpp"

#include <algorithm>
#include <cctype>

#include <omp.h>

#include "lep/codec.hpp"
#include "lep/coeff_image.hpp"
#include "lep/errors.hpp"
#include "lep/jpeg.hpp"

namespace lep {
namespace {

bool has_jpeg_ext(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".jpg" || ext == ".jpeg";
}

// Parse + unbounded encode of one file, recording the access trace. Returns
// false (with reason) when the image cannot be processed.
bool profile_one(const std::filesystem::path& file, UnboundedStore& store,
                 ImageTrace& trace, std::string& reason) {
  try {
    CoefficientImage img = parse_jpeg(read_file(file));
    trace = ImageTrace{};
    trace.id = file.filename().string();
    store.arm_trace(&trace);
    encode_payload(img, store);
    store.arm_trace(nullptr);
    for (auto& v : trace.touched) std::sort(v.begin(), v.end());
    return true;
  } catch (const Error& e) {
    store.arm_trace(nullptr);
    reason = file.string() + ": " + e.what();
    return false;
  }
}

}  // namespace

std::vector<std::filesystem::path> list_jpegs(
    const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && has_jpeg_ext(entry.path()))
      files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

CorpusProfile profile_corpus_serial(
    const std::vector<std::filesystem::path>& files) {
  const Registry& reg = registry();
  CorpusProfile profile(reg);
  UnboundedStore store(reg);
  for (const auto& file : files) {
    ImageTrace trace;
    std::string reason;
    if (profile_one(file, store, trace, reason)) {
      profile.hist.add(trace);
      profile.traces.push_back(std::move(trace));
    } else {
      profile.failures.push_back(std::move(reason));
    }
  }
  return profile;
}

CorpusProfile profile_corpus(const std::vector<std::filesystem::path>& files,
                             int jobs) {
  const Registry& reg = registry();
  const int n = static_cast<int>(files.size());
  std::vector<ImageTrace> traces(files.size());
  std::vector<std::string> reasons(files.size());
  std::vector<char> ok(files.size(), 0);

  int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel num_threads(threads)
  {
    UnboundedStore store(reg);  // one store per thread
#pragma omp for schedule(dynamic)
    for (int i = 0; i < n; ++i)
      ok[i] = profile_one(files[i], store, traces[i], reasons[i]) ? 1 : 0;
  }

  // Merge in path order so the result is bit-identical to the serial pass.
  CorpusProfile profile(reg);
  for (int i = 0; i < n; ++i) {
    if (ok[i]) {
      profile.hist.add(traces[i]);
      profile.traces.push_back(std::move(traces[i]));
    } else {
      profile.failures.push_back(std::move(reasons[i]));
    }
  }
  return profile;
}

}  // namespace lep
