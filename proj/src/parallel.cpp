#include "macs/parallel.hpp"

#include <atomic>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace macs {

namespace {
std::atomic<bool> g_parallel{true};
}

void set_parallel_enabled(bool on) { g_parallel.store(on); }
bool parallel_enabled() { return g_parallel.load(); }

int worker_count() {
#ifdef _OPENMP
  return parallel_enabled() ? omp_get_max_threads() : 1;
#else
  return 1;
#endif
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
#ifdef _OPENMP
  if (parallel_enabled() && n > 1) {
#pragma omp parallel for schedule(dynamic, 1)
    for (long long i = 0; i < static_cast<long long>(n); ++i)
      fn(static_cast<std::size_t>(i));
    return;
  }
#endif
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  const std::size_t nb = block_count(n, block_size);
  parallel_for(nb, [&](std::size_t b) {
    const std::size_t begin = b * block_size;
    const std::size_t end = begin + block_size < n ? begin + block_size : n;
    fn(b, begin, end);
  });
}

}  // namespace macs
