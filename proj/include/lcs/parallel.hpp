#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lcs {

namespace detail {
inline std::atomic<unsigned>& thread_setting() {
    static std::atomic<unsigned> n{[] {
        if (const char* env = std::getenv("LCS_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v > 0) return static_cast<unsigned>(v);
        }
        return std::max(1u, std::thread::hardware_concurrency());
    }()};
    return n;
}
} // namespace detail

inline unsigned num_threads() { return detail::thread_setting().load(); }
inline void set_num_threads(unsigned n) { detail::thread_setting().store(std::max(1u, n)); }

// Work is cut into chunks whose boundaries depend only on `n` and `grain`,
// never on the thread count. Per-chunk partial results reduced in chunk
// order are therefore identical for any number of threads.
inline std::size_t chunk_count(std::size_t n, std::size_t grain) {
    return n == 0 ? 0 : (n + grain - 1) / grain;
}

// Calls body(chunk_index, begin, end) for every chunk.
template <typename Body>
void parallel_chunks(std::size_t n, std::size_t grain, Body&& body) {
    const std::size_t chunks = chunk_count(n, grain);
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(num_threads(), chunks));
    auto run = [&](std::size_t c) {
        const std::size_t begin = c * grain;
        body(c, begin, std::min(n, begin + grain));
    };
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) run(c);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t c; (c = next.fetch_add(1)) < chunks;) {
                try {
                    run(c);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

// Calls body(i) for i in [0, n).
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t grain = 1024) {
    parallel_chunks(n, grain, [&](std::size_t, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) body(i);
    });
}

} // namespace lcs
