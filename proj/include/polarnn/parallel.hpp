// Fixed-chunk parallel execution. Work is cut into chunks of a constant
// size and chunk results are reduced in chunk order by the caller, so
// results are bit-identical for any worker count.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace polarnn {

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

inline std::size_t chunk_count(std::size_t total, std::size_t chunk) {
    return (total + chunk - 1) / chunk;
}

// fn(chunk_index, begin, end) is invoked once per chunk, possibly from
// several threads; distinct chunks never overlap.
inline void parallel_chunks(std::size_t total, std::size_t chunk, int workers,
                            const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (total == 0) return;
    const std::size_t n_chunks = chunk_count(total, chunk);
    const int n_threads = std::min<std::size_t>(resolve_workers(workers), n_chunks);

    if (n_threads <= 1) {
        for (std::size_t ci = 0; ci < n_chunks; ++ci) {
            const std::size_t begin = ci * chunk;
            fn(ci, begin, std::min(begin + chunk, total));
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        try {
            for (;;) {
                const std::size_t ci = next.fetch_add(1);
                if (ci >= n_chunks) return;
                const std::size_t begin = ci * chunk;
                fn(ci, begin, std::min(begin + chunk, total));
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!first_error) first_error = std::current_exception();
        }
    };
    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (int i = 0; i < n_threads; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace polarnn
