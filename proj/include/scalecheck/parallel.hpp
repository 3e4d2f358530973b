#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace scalecheck {

/// Runs fn(i) for i in [0, count) across up to `threads` workers
/// (0 = hardware concurrency).  fn must be safe to call concurrently
/// for distinct indices.
template <typename Fn>
void parallel_for(std::size_t count, const Fn& fn, int threads = 0) {
    std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                      : std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < count; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace scalecheck
