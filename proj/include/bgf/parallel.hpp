#pragma once

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace bgf {

/// Worker count from the BGF_THREADS environment variable; defaults to 1.
inline int configured_threads() {
    const char* env = std::getenv("BGF_THREADS");
    if (env == nullptr) return 1;
    const int n = std::atoi(env);
    return n >= 1 ? n : 1;
}

/// Runs body(i) for i in [0, n) across `threads` workers with a static block
/// split. Results must be written to preallocated per-i slots so the output
/// is independent of the schedule.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
    std::vector<std::thread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += nw) body(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace bgf
