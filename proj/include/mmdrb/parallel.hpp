#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace mmdrb {

/// Thread budget: hardware concurrency capped by the MMDRB_THREADS
/// environment variable (values below 1 are ignored).
inline unsigned thread_budget() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("MMDRB_THREADS")) {
        try {
            const long cap = std::stol(env);
            if (cap >= 1 && static_cast<unsigned>(cap) < n) n = static_cast<unsigned>(cap);
        } catch (...) {
            // unparsable values leave the hardware default in place
        }
    }
    return n;
}

/// Run fn(0..n-1) with results independent of the thread count: indices are
/// statically strided and each index writes only its own slot.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    const unsigned workers = std::min<std::size_t>(thread_budget(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error = nullptr;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace mmdrb
