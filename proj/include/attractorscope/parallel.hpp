#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace attractorscope {

// Worker count for intra-stage parallelism. Honors ATTRACTORSCOPE_THREADS
// (0 or unset = hardware concurrency).
inline unsigned thread_count() {
    if (const char* env = std::getenv("ATTRACTORSCOPE_THREADS")) {
        long n = std::strtol(env, nullptr, 10);
        if (n > 0) return static_cast<unsigned>(n);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

// Runs body(i) for i in [begin, end) over a fixed block partition. Each index
// is visited exactly once, so writes to disjoint locations stay deterministic
// regardless of the worker count.
inline void parallel_for(int begin, int end, const std::function<void(int)>& body) {
    const int n = end - begin;
    if (n <= 0) return;
    unsigned workers = thread_count();
    if (workers <= 1 || n < 64) {
        for (int i = begin; i < end; ++i) body(i);
        return;
    }
    if (workers > static_cast<unsigned>(n)) workers = static_cast<unsigned>(n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + static_cast<int>(workers) - 1) / static_cast<int>(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const int lo = begin + static_cast<int>(w) * chunk;
        const int hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &body] {
            for (int i = lo; i < hi; ++i) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace attractorscope
