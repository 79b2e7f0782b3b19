#include "ppwgan/parallel.hpp"

#include <cstdlib>
#include <string>

namespace ppwgan::parallel {

namespace {

int env_cap() {
  const char* raw = std::getenv("PPWGAN_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  try {
    const int v = std::stoi(raw);
    return v > 0 ? v : 0;
  } catch (...) {
    return 0;
  }
}

}  // namespace

int max_threads() {
#ifdef PPWGAN_HAVE_OPENMP
  static const int cap = env_cap();
  const int available = omp_get_max_threads();
  return cap > 0 && cap < available ? cap : available;
#else
  return 1;
#endif
}

void configure_from_env() {
#ifdef PPWGAN_HAVE_OPENMP
  if (const int cap = env_cap(); cap > 0) omp_set_num_threads(cap);
#endif
}

}  // namespace ppwgan::parallel
