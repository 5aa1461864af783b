#pragma once

#include <cstddef>
#include <functional>

namespace kme {

// Worker count from KME_LAB_JOBS when set, else the hardware concurrency.
int default_jobs();

// Runs body(i) for i in [0, count) on up to `jobs` threads (jobs <= 0 means
// default_jobs()). The first exception thrown by any task is rethrown after all
// workers stop; remaining tasks are skipped.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace kme
