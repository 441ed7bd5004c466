#pragma once

// Deterministic chunked parallel-for. Work is split into fixed-size chunks
// indexed 0..n_chunks-1; whichever thread runs a chunk, per-chunk results are
// reduced by the caller in chunk order, so outputs do not depend on the
// worker count or scheduling.

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace plab {

// 0 means "use hardware concurrency".
void set_max_workers(int n);
int max_workers();

inline std::size_t chunk_count(std::size_t n, std::size_t grain) {
    return n == 0 ? 0 : (n - 1) / grain + 1;
}

// fn(chunk_index, begin, end) over [0, n) in chunks of `grain` items.
template <class Fn>
void parallel_chunks(std::size_t n, std::size_t grain, Fn&& fn) {
    const std::size_t chunks = chunk_count(n, grain);
    if (chunks == 0) return;

    const int hw = max_workers();
    const std::size_t workers =
        std::min<std::size_t>(chunks, hw > 0 ? static_cast<std::size_t>(hw) : 1);

    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c)
            fn(c, c * grain, std::min(n, (c + 1) * grain));
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};

    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks || failed.load()) return;
            try {
                fn(c, c * grain, std::min(n, (c + 1) * grain));
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace plab
