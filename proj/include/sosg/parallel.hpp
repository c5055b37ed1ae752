#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace sosg {

/// Worker count: the explicit request if nonzero, else hardware concurrency,
/// capped by the SOSG_THREADS environment variable when set.
inline unsigned resolve_threads(unsigned requested = 0) {
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("SOSG_THREADS")) {
        char* end = nullptr;
        long cap = std::strtol(env, &end, 10);
        if (end != env && cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

/// Splits [0, n) into at most `threads` contiguous chunks and runs
/// `fn(begin, end, chunk_index)` on each. Chunk boundaries depend only on
/// (n, threads), so callers that merge chunk outputs in chunk order get the
/// same result as a serial run. The first exception thrown by any chunk is
/// rethrown after all workers join.
template <typename Fn>
void parallel_chunks(std::size_t n, unsigned threads, Fn&& fn) {
    if (n == 0) return;
    std::size_t chunks = std::min<std::size_t>(std::max(1u, threads), n);
    if (chunks == 1) {
        fn(std::size_t{0}, n, std::size_t{0});
        return;
    }
    std::vector<std::exception_ptr> errors(chunks);
    std::vector<std::thread> workers;
    workers.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        std::size_t begin = n * c / chunks;
        std::size_t end = n * (c + 1) / chunks;
        workers.emplace_back([&, begin, end, c] {
            try {
                fn(begin, end, c);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    parallel_chunks(n, threads, [&](std::size_t begin, std::size_t end, std::size_t) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
    });
}

inline std::size_t chunk_count(std::size_t n, unsigned threads) {
    return n == 0 ? 0 : std::min<std::size_t>(std::max(1u, threads), n);
}

}  // namespace sosg
