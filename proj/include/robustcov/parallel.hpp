#pragma once

#include <cstddef>
#include <functional>

namespace robustcov {

/// Global override for the worker count. 0 restores automatic detection
/// (ROBUSTCOV_THREADS environment variable, then hardware concurrency).
void set_max_threads(int n);

/// Worker count that parallel_for will use when its `threads` argument is 0.
int max_threads();

/// Runs fn(0) .. fn(count-1) on up to `threads` workers (0 = max_threads()).
/// Work items must write to disjoint locations; the function guarantees the
/// same set of calls regardless of schedule, so any such loop is
/// deterministic. Exceptions thrown by work items are collected and the first
/// one (by item index) is rethrown after all workers finish.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn,
                  int threads = 0);

}  // namespace robustcov
