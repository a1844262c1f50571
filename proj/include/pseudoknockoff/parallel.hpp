#pragma once

#include <cstdint>
#include <functional>

namespace pkf {

/// Runs fn(i) for every i in [0, n) on up to n_threads workers
/// (0 = hardware concurrency).  Indices are split into contiguous blocks,
/// so any output written to a slot addressed by i is independent of the
/// worker count; reducing such slots in index order afterwards gives
/// bit-identical results for any thread count.  The first exception thrown
/// by a worker is rethrown on the calling thread after all workers join.
void parallel_for(std::int64_t n, const std::function<void(std::int64_t)>& fn,
                  int n_threads = 0);

}  // namespace pkf
