#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace voltnet {

// Runs fn(i) for i in [0, n) on up to n_threads workers. Each task owns
// its index, so writers target disjoint slots and results never depend
// on scheduling; the first thrown exception is rethrown after join.
inline void parallel_for_indexed(long n, int n_threads, const std::function<void(long)>& fn) {
    if (n <= 0) return;
    int workers = std::max(1, n_threads);
    if (workers > n) workers = static_cast<int>(n);
    if (workers == 1) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            while (true) {
                long i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace voltnet
