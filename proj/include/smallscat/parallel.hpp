#pragma once

#include <cstddef>
#include <functional>

namespace smallscat {

/// Environment variable overriding the worker count (integer >= 1).
inline constexpr const char* kThreadsEnv = "SMALLSCAT_THREADS";

/// Current worker count: set_thread_count if called, else SMALLSCAT_THREADS,
/// else the hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);

/// Calls body(i) for i in [0, n) over contiguous blocks, one per worker.
/// Each index is visited exactly once; bodies must only write disjoint data.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

} // namespace smallscat
