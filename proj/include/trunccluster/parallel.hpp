#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace trunccluster {

/// Thread policy for data-parallel loops.
///
/// Work is always split into chunks of a fixed size that does not depend on
/// the thread count, and per-chunk partial results are merged in chunk order.
/// Outputs are therefore bit-identical for any `threads` value; `threads == 1`
/// runs every chunk inline on the calling thread.
struct Executor {
    unsigned threads = 1;
    std::size_t chunk_size = 1024;

    std::size_t chunk_count(std::size_t n) const { return n == 0 ? 0 : (n + chunk_size - 1) / chunk_size; }

    /// Calls fn(begin, end, chunk_index) for every chunk of [0, n).
    template <typename Fn>
    void for_chunks(std::size_t n, Fn&& fn) const {
        const std::size_t chunks = chunk_count(n);
        auto run_chunk = [&](std::size_t k) {
            const std::size_t begin = k * chunk_size;
            fn(begin, std::min(n, begin + chunk_size), k);
        };
        const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), chunks);
        if (workers <= 1) {
            for (std::size_t k = 0; k < chunks; ++k) run_chunk(k);
            return;
        }
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t k = w; k < chunks; k += workers) run_chunk(k);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
        }
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
};

}  // namespace trunccluster
