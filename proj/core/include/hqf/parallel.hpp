#pragma once

#include <cstddef>
#include <functional>

namespace hqf {

/// Runs body(i) for i in [0, count) on up to `jobs` threads (jobs <= 1 runs
/// inline). Each index is processed exactly once; results written by index
/// are therefore independent of scheduling. The first exception thrown by a
/// body is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& body);

}  // namespace hqf
