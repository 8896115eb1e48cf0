#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "lep/store.hpp"

namespace lep {

// Sorted list of *.jpg / *.jpeg files directly inside dir.
std::vector<std::filesystem::path> list_jpegs(const std::filesystem::path& dir);

struct CorpusProfile {
  AccessHistogram hist;
  std::vector<ImageTrace> traces;          // one per decodable image, in path order
  std::vector<std::string> failures;       // "path: reason"

  explicit CorpusProfile(const Registry& reg) : hist(reg) {}
};

// Parses every image and collects its access trace under an unbounded
// encode. The serial variant is the reference; the parallel variant runs the
// per-image work under OpenMP with `jobs` threads (0 = hardware default) and
// merges per-thread results. Both produce identical profiles.
CorpusProfile profile_corpus_serial(
    const std::vector<std::filesystem::path>& files);
CorpusProfile profile_corpus(const std::vector<std::filesystem::path>& files,
                             int jobs);

}  // namespace lep
