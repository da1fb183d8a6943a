#pragma once

// Bounded worker pool for independent tasks. Results must be written to
// per-index slots and reduced by the caller in index order, which keeps every
// aggregate independent of the job count.

#include <cstddef>
#include <functional>

namespace echoprep {

// Process-wide cap used when jobs <= 0 is passed below. Defaults to 1.
void set_default_jobs(int jobs);
int default_jobs() noexcept;

// Calls task(index, worker) for index in [0, n); worker is in [0, workers).
// Returns the number of workers used. The exception thrown by the lowest
// failing index is rethrown after all workers stop.
int parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t, int)>& task);

// Number of workers parallel_for will use for n tasks.
int worker_count(std::size_t n, int jobs) noexcept;

}  // namespace echoprep
