#pragma once

#include <cstddef>
#include <functional>

namespace macs {

// Global switch between the OpenMP kernels and the serial reference path.
// Tests run both and assert identical results; the benchmark target compares
// their throughput.
void set_parallel_enabled(bool on);
bool parallel_enabled();
int worker_count();

// Runs fn(i) for i in [0, n). Iterations must be independent. Results are
// identical between the serial and parallel paths as long as fn(i) writes
// only to slot i of its outputs.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Deterministic block-parallel gradient accumulation: samples are grouped
// into fixed-size blocks, each block accumulates into its own buffer, and
// buffers are reduced serially in block order. The floating-point result is
// independent of thread count and equals the serial order of summation
// within each block.
inline std::size_t block_count(std::size_t n, std::size_t block_size) {
  return (n + block_size - 1) / block_size;
}

void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t block, std::size_t begin,
                                              std::size_t end)>& fn);

}  // namespace macs
