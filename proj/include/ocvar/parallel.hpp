#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ocvar {

/// Calls fn(i) for i in [0, n) on up to `jobs` threads. Results must be
/// written to per-index slots; the first exception is rethrown after all
/// workers finish.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace ocvar
