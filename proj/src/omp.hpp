#pragma once

// Include this instead of <omp.h> so the library also builds without OpenMP.

#if defined(_OPENMP)
#include <omp.h>
namespace falldet {
constexpr bool use_omp = true;
}  // namespace falldet
#else
#pragma GCC diagnostic ignored "-Wunknown-pragmas"
namespace falldet {
constexpr bool use_omp = false;
}  // namespace falldet
#define omp_get_thread_num() 0
#define omp_get_max_threads() 1
#endif
