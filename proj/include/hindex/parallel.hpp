#pragma once

#include <cstddef>
#include <functional>

namespace hindex {

// Worker count: HINDEX_THREADS if set and positive, else hardware concurrency.
int thread_count();

// Runs fn(i) for i in [0, count). Work items must write only to their own
// output slots; callers reduce in index order, so results do not depend on
// the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

}  // namespace hindex
