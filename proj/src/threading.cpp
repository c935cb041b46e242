#include "amdreg/threading.hpp"

#include <atomic>
#include <thread>
#include <vector>

namespace amdreg {

namespace {
int g_max_threads = 1;
}

int max_threads() { return g_max_threads; }

void set_max_threads(int n) {
    if (n <= 0) {
        unsigned hw = std::thread::hardware_concurrency();
        g_max_threads = hw > 0 ? int(hw) : 1;
    } else {
        g_max_threads = n;
    }
}

void for_chunks(std::size_t count, std::size_t chunk_size,
                const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    if (chunk_size == 0) chunk_size = 1;
    std::size_t nchunks = (count + chunk_size - 1) / chunk_size;
    int workers = g_max_threads;
    if (workers <= 1 || nchunks <= 1) {
        for (std::size_t c = 0; c < nchunks; ++c) {
            std::size_t begin = c * chunk_size;
            std::size_t end = begin + chunk_size < count ? begin + chunk_size : count;
            fn(c, begin, end);
        }
        return;
    }
    if (std::size_t(workers) > nchunks) workers = int(nchunks);
    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= nchunks) return;
            std::size_t begin = c * chunk_size;
            std::size_t end = begin + chunk_size < count ? begin + chunk_size : count;
            fn(c, begin, end);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(std::size_t(workers - 1));
    for (int i = 0; i < workers - 1; ++i) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();
}

} // namespace amdreg
