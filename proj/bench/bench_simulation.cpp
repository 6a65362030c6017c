// Times the serial and OpenMP study runners on the same configuration.
// Usage: bench_simulation [replications] [threads]

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <string>

#include <omp.h>

#include "exactmatch/report.hpp"
#include "exactmatch/simulation.hpp"

using namespace exactmatch;

namespace {

template <typename F>
double seconds(F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  SimulationConfig cfg;
  cfg.replications = argc > 1 ? std::stoul(argv[1]) : 100;
  cfg.seed = 1;
  const int threads = argc > 2 ? std::stoi(argv[2]) : omp_get_max_threads();

  SimulationResult serial, parallel;
  const double ts = seconds([&] { serial = run_study_serial(cfg); });
  const double tp = seconds([&] { parallel = run_study(cfg, threads); });
  const bool same = to_json(serial.summary).dump() == to_json(parallel.summary).dump();

  std::cout << "replications " << cfg.replications << ", threads " << threads << '\n'
            << "serial    " << ts << " s  (" << ts / static_cast<double>(cfg.replications) << " s/rep)\n"
            << "parallel  " << tp << " s  (" << tp / static_cast<double>(cfg.replications) << " s/rep)\n"
            << "speedup   " << ts / tp << '\n'
            << "summaries " << (same ? "identical" : "DIFFER") << '\n';
  return same ? EXIT_SUCCESS : EXIT_FAILURE;
}
