#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace rfilter {

/// Runs fn(index, worker) for index in [0, n) on up to `workers` threads.
/// On failure rethrows the exception of the smallest failing index.
template <class Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, n));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, std::size_t{0});
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::size_t> error_index(workers, n);
    std::atomic<bool> failed{false};
    auto body = [&](std::size_t w) {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i, w);
            } catch (...) {
                errors[w] = std::current_exception();
                error_index[w] = i;
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(body, w);
    body(0);
    for (auto& t : pool) t.join();
    std::size_t best = workers;
    for (std::size_t w = 0; w < workers; ++w)
        if (errors[w] && (best == workers || error_index[w] < error_index[best])) best = w;
    if (best != workers) std::rethrow_exception(errors[best]);
}

}  // namespace rfilter
