// Order-preserving parallel map over independent work items.
#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace sbd {

/// Evaluates fn(i) for i in [0, count) on up to `workers` threads and returns the results in
/// index order. The first exception thrown by any item is rethrown after all workers stop.
template <typename Fn>
auto parallel_map(std::size_t count, int workers, Fn&& fn) {
    using Result = decltype(fn(std::size_t{0}));
    std::vector<Result> out(count);
    const auto pool = static_cast<std::size_t>(std::max(1, workers));
    if (pool == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < std::min(pool, count); ++w) threads.emplace_back(run);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace sbd
