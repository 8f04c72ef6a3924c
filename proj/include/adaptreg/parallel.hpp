#pragma once

#include <cstddef>
#include <functional>

namespace adaptreg {

/// Worker count for `requested` (0 = hardware concurrency), capped by the
/// ADAPTREG_MAX_JOBS environment variable when it is set.
int resolve_jobs(int requested);

/// Runs body(i) for i in [0, count) on up to `jobs` threads. Indices are
/// handed out dynamically; callers write results into slot i so the outcome
/// does not depend on scheduling. The first exception thrown by any body is
/// rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace adaptreg
