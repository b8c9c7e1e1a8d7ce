#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace berkson {

// 0 means: BB_THREADS from the environment, else the hardware concurrency.
inline unsigned resolve_threads(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("BB_THREADS")) {
        try {
            const int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs body(i) for i in [0, count) on up to `threads` workers. The first
// exception thrown by any task is rethrown after all workers join.
template <class Body>
void parallel_for(std::size_t count, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    pool.clear();
    if (error) std::rethrow_exception(error);
}

}  // namespace berkson
