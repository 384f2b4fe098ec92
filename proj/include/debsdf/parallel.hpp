#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef DEBSDF_HAVE_OPENMP
#include <omp.h>
#endif

namespace debsdf {

// Every data-parallel kernel has a serial form kept as the reference; both
// write results into per-index slots so their outputs are bitwise identical.
enum class Exec { serial, parallel };

inline int worker_count([[maybe_unused]] Exec exec) {
#ifdef DEBSDF_HAVE_OPENMP
  if (exec == Exec::parallel) return omp_get_max_threads();
#endif
  return 1;
}

inline int worker_index() {
#ifdef DEBSDF_HAVE_OPENMP
  return omp_in_parallel() ? omp_get_thread_num() : 0;
#else
  return 0;
#endif
}

// Calls body(i) for i in [0, n). Exceptions thrown by any iteration are
// rethrown (the first one captured) after the loop finishes.
template <class Body>
void for_each_index(std::size_t n, Exec exec, Body&& body) {
#ifdef DEBSDF_HAVE_OPENMP
  if (exec == Exec::parallel && n > 1) {
    std::exception_ptr error;
    std::mutex error_mutex;
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 4)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
      try {
        body(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
    if (error) std::rethrow_exception(error);
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) body(i);
}

}  // namespace debsdf
