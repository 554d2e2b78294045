#pragma once

#include <cstddef>
#include <functional>

namespace learnreach {

// 0 means "use available hardware parallelism".
unsigned resolve_threads(unsigned requested);

// Splits [0, n) into contiguous chunks, one per worker, and blocks until all
// chunks finish. Workers must write only to positions they own.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t begin, std::size_t end)>& body);

}  // namespace learnreach
