#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace attribex {

std::size_t default_thread_count();

// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write results
// into slot i, so output never depends on scheduling. The first exception (by
// lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace attribex
