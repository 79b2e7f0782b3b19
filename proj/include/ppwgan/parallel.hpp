#pragma once

// Data-parallel loop helpers. Every kernel in the library is written as an
// index loop over independent items (sequences), so the OpenMP and serial
// paths run identical per-item code; reductions are always combined in index
// order afterwards, which keeps results bit-identical across thread counts.

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef PPWGAN_HAVE_OPENMP
#include <omp.h>
#endif

namespace ppwgan::parallel {

enum class Exec { serial, threaded };

/// Thread count used by threaded loops: OpenMP's default, capped by the
/// PPWGAN_THREADS environment variable when set.
int max_threads();

/// Applies the PPWGAN_THREADS cap to the OpenMP runtime. Called once by the
/// CLI; library callers may call it too.
void configure_from_env();

namespace detail {

// Keeps the exception of the lowest failing index so that the error that
// surfaces does not depend on scheduling.
class FirstError {
 public:
  void capture(std::size_t index) {
    std::lock_guard lock(mu_);
    if (!error_ || index < index_) {
      error_ = std::current_exception();
      index_ = index;
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

 private:
  std::mutex mu_;
  std::exception_ptr error_;
  std::size_t index_ = 0;
};

}  // namespace detail

template <typename F>
void for_each_index(std::size_t n, F&& body, Exec exec = Exec::threaded) {
#ifdef PPWGAN_HAVE_OPENMP
  if (exec == Exec::threaded && n > 1 && max_threads() > 1) {
    detail::FirstError err;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4) num_threads(max_threads())
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        err.capture(static_cast<std::size_t>(i));
      }
    }
    err.rethrow();
    return;
  }
#endif
  (void)exec;
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace ppwgan::parallel
