#include "bose2d/streams.hpp"

#include <cstdlib>
#include <string>

#include <omp.h>

namespace bose2d {

int worker_count() {
  if (const char* env = std::getenv("BOSE2D_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
  }
  return omp_get_max_threads();
}

void configure_workers() { omp_set_num_threads(worker_count()); }

}  // namespace bose2d
