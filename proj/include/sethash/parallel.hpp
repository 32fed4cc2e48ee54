#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace sethash {

namespace detail {
inline std::atomic<int>& thread_setting() {
    static std::atomic<int> value{0};
    return value;
}

inline bool& inside_parallel_region() {
    thread_local bool inside = false;
    return inside;
}
} // namespace detail

/// 0 restores the default (SETHASH_THREADS, else hardware concurrency).
inline void set_thread_count(int n) { detail::thread_setting() = std::max(0, n); }

inline int thread_count() {
    int n = detail::thread_setting();
    if (n > 0) return n;
    if (const char* env = std::getenv("SETHASH_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

/// Runs fn(i) for i in [0, n). Work is split into contiguous static chunks so
/// each index is always handled by exactly one call; results must be written
/// to disjoint slots. Nested calls run serially on the calling worker.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(thread_count()), n);
    if (workers <= 1 || n < 8 || detail::inside_parallel_region()) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            detail::inside_parallel_region() = true;
            try {
                std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
                for (std::size_t i = lo; i < hi; ++i) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace sethash
