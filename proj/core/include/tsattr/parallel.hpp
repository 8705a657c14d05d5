#pragma once

#include <cstddef>
#include <functional>

namespace tsattr {

// Runs fn(0..count-1) on up to `jobs` threads using contiguous static chunks.
// Results must not depend on scheduling; callers write to per-index slots.
// The exception from the lowest failing index is rethrown.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace tsattr
