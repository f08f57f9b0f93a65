#ifndef MOFLP_PARALLEL_HPP
#define MOFLP_PARALLEL_HPP

#include <cstddef>
#include <functional>

namespace moflp {

/// Number of workers actually used for `requested` (0 means auto).
int resolve_workers(int requested);

/// Runs fn(i) for every i in [0, count) on a bounded worker pool. Tasks must
/// write results to per-index slots only; the schedule never affects outputs.
/// The first exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t count, int workers,
                  const std::function<void(std::size_t)>& fn);

}  // namespace moflp

#endif  // MOFLP_PARALLEL_HPP
