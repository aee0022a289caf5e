#pragma once

#include <cstddef>
#include <functional>

namespace teamkappa {

// Environment variable that overrides the default worker count.
inline constexpr const char* kThreadsEnv = "TEAMKAPPA_THREADS";

// requested > 0 wins; otherwise TEAMKAPPA_THREADS if it parses as a positive
// integer; otherwise std::thread::hardware_concurrency() (at least 1).
unsigned resolve_threads(unsigned requested = 0);

// Calls body(i) for every i in [0, count) on up to `threads` workers.
// Each index is visited exactly once; the first exception is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

}  // namespace teamkappa
