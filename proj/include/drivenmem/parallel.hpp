#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace drivenmem {

/// Upper bound on worker threads used by data-parallel loops (>= 1).
unsigned max_threads() noexcept;
void set_max_threads(unsigned n) noexcept;

/// Splits [0, n) into contiguous chunks and runs body(begin, end) on up to
/// max_threads() workers. Each index is handled by exactly one call, so a
/// body that writes only to its own indices gives results independent of the
/// thread count.
template <class Body>
void parallel_for(std::size_t n, Body&& body, std::size_t min_chunk = 256) {
    const std::size_t workers =
        std::min<std::size_t>(max_threads(), std::max<std::size_t>(1, n / std::max<std::size_t>(1, min_chunk)));
    if (workers <= 1) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t b = w * chunk;
        const std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&body, b, e] { body(b, e); });
    }
    body(std::size_t{0}, std::min(n, chunk));
    for (auto& t : pool) t.join();
}

}  // namespace drivenmem
