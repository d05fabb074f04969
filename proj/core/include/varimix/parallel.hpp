#pragma once

#include <cstddef>
#include <functional>

namespace varimix {

/// Number of worker threads used by parallel_for. Defaults to the
/// VARIMIX_THREADS environment variable, else hardware concurrency.
std::size_t num_threads();
void set_num_threads(std::size_t n);

/// Runs body(i) for i in [0, n). Each index is visited exactly once; the
/// body must only write to slots owned by its index, which keeps results
/// independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace varimix
