#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cavlev {

/// Runs body(i) for i in [0, count) on up to n_threads workers. Results must
/// be written to pre-sized, index-disjoint storage by the body; the first
/// exception thrown by any worker is rethrown on the calling thread.
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body,
                         unsigned n_threads = 0)
{
    if (count == 0)
        return;
    if (n_threads == 0)
        n_threads = std::max(1u, std::thread::hardware_concurrency());
    n_threads = static_cast<unsigned>(std::min<std::size_t>(n_threads, count));

    if (n_threads <= 1) {
        for (std::size_t i = 0; i < count; ++i)
            body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count)
                return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(count);
                return;
            }
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t)
        threads.emplace_back(worker);
    for (auto& t : threads)
        t.join();

    if (error)
        std::rethrow_exception(error);
}

} // namespace cavlev
