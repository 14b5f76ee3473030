#pragma once

// Chunked parallel loop over element indices.  The worker count is capped
// by the GEOPLAST_THREADS environment variable (default 1); workers write
// only to disjoint per-index slots, and all reductions stay sequential, so
// results are bit-identical at any thread count.

#include <cstdlib>
#include <thread>
#include <vector>

namespace geoplast {

inline int max_threads() {
    static const int cached = [] {
        const char* env = std::getenv("GEOPLAST_THREADS");
        if (!env) return 1;
        const int v = std::atoi(env);
        if (v < 1) return 1;
        const int hw = int(std::thread::hardware_concurrency());
        return hw > 0 ? std::min(v, hw) : v;
    }();
    return cached;
}

template <class Fn>
void parallel_for(int n, Fn&& fn) {
    const int workers = std::min(max_threads(), n);
    if (workers <= 1 || n < 64) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const int chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        const int lo = w * chunk, hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace geoplast
