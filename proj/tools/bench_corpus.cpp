// Times the corpus profiler: serial reference vs the OpenMP path, checking
// on the way that both produce the same histogram.

#include <chrono>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "lep/corpus.hpp"
#include "lep/errors.hpp"

using namespace lep;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

bool same_profile(const CorpusProfile& a, const CorpusProfile& b) {
  if (a.hist.images != b.hist.images) return false;
  if (a.hist.counts != b.hist.counts) return false;
  if (a.traces.size() != b.traces.size()) return false;
  for (size_t i = 0; i < a.traces.size(); ++i)
    if (a.traces[i].touched != b.traces[i].touched) return false;
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Profile-throughput benchmark: serial vs OpenMP"};
  std::string corpus;
  int jobs = 0;
  int repeats = 3;
  app.add_option("--corpus", corpus, "Directory of baseline JPEGs")->required();
  app.add_option("--jobs", jobs, "Threads for the parallel run (0 = hardware)");
  app.add_option("--repeats", repeats, "Timed repetitions per variant");
  CLI11_PARSE(app, argc, argv);

  try {
    auto files = list_jpegs(corpus);
    if (files.empty()) throw EmptyCorpus("no JPEGs in " + corpus);

    CorpusProfile serial = profile_corpus_serial(files);  // warm page cache
    CorpusProfile parallel = profile_corpus(files, jobs);
    if (!same_profile(serial, parallel)) {
      std::cerr << "FAIL: serial and parallel profiles differ\n";
      return kExitFailure;
    }

    double best_serial = 1e300, best_parallel = 1e300;
    for (int r = 0; r < repeats; ++r) {
      auto t0 = Clock::now();
      profile_corpus_serial(files);
      best_serial = std::min(best_serial, seconds_since(t0));
      t0 = Clock::now();
      profile_corpus(files, jobs);
      best_parallel = std::min(best_parallel, seconds_since(t0));
    }

    double n = static_cast<double>(serial.traces.size());
    std::cout << "images: " << serial.traces.size() << "\n"
              << "serial:   " << best_serial << " s (" << n / best_serial
              << " images/s)\n"
              << "parallel: " << best_parallel << " s (" << n / best_parallel
              << " images/s)\n"
              << "speedup:  " << best_serial / best_parallel << "x\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  }
}
