#pragma once

#include <cstddef>
#include <functional>

namespace brainseg {

// Runs body(i) for i in [0, count) on up to `threads` workers. Callers write
// results into per-index slots so output never depends on scheduling.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& body);

}  // namespace brainseg
