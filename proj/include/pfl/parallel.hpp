#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace pfl {

/// Runs body(i) for i in [0, n). Every index is computed by exactly one worker and
/// writes only its own output slot, so results do not depend on `threads`.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&body, n, w, workers] {
            for (std::size_t i = w; i < n; i += workers) body(i);
        });
    }
}

}  // namespace pfl
