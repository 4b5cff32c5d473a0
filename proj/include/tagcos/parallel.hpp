#pragma once

#include <cstddef>
#include <functional>

namespace tagcos {

// Worker count used by every internal parallel loop. Initialised from the
// TAGCOS_THREADS environment variable, falling back to hardware concurrency.
std::size_t thread_count();
void set_thread_count(std::size_t n);  // 0 restores the default

/// Calls body(begin, end) over contiguous chunks of [0, n). Each index is
/// visited exactly once; callers must only write to per-index slots so the
/// result does not depend on the chunking. Calls made from inside a worker
/// run serially on that worker.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body,
                  std::size_t min_chunk = 256);

}  // namespace tagcos
