#pragma once

#include <cstddef>
#include <functional>

namespace amdreg {

// Global worker-thread cap used by the chunked loops below.
// set_max_threads(0) selects the hardware concurrency; the default is 1.
int max_threads();
void set_max_threads(int n);

// Runs fn(chunk_index, begin, end) for every chunk of [0, count).
// Chunk boundaries depend only on count and chunk_size, never on the thread
// count, so per-chunk partial results reduced in chunk order are identical
// for any number of workers.
void for_chunks(std::size_t count, std::size_t chunk_size,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn);

} // namespace amdreg
