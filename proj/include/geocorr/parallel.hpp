#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace geocorr {

/// Monte Carlo run parameters shared by every estimator.
///
/// `chunk_size` is the number of primary draws per work chunk (0 picks the estimator's
/// default). Chunk k always uses RngStream(seed, k), so results depend on the seed and the
/// chunk layout but never on `workers`.
struct McConfig {
    std::int64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    int workers = 0;
    std::int64_t chunk_size = 0;
};

int resolve_workers(int requested);

/// Runs fn(chunk) for chunk in [0, chunks) on a worker pool and returns the results indexed by
/// chunk, so callers can reduce in a fixed order.
template <class Fn>
auto run_chunks(std::int64_t chunks, int workers, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::int64_t>> {
    using Result = std::invoke_result_t<Fn&, std::int64_t>;
    std::vector<Result> results(static_cast<std::size_t>(chunks));
    const int pool = std::max(1, std::min<int>(resolve_workers(workers),
                                               static_cast<int>(std::max<std::int64_t>(chunks, 1))));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::int64_t chunk = next.fetch_add(1);
            if (chunk >= chunks) return;
            try {
                results[static_cast<std::size_t>(chunk)] = fn(chunk);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(chunks);
                return;
            }
        }
    };

    if (pool == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

/// Runs fn(chunk, worker) for chunk in [0, chunks); `worker` in [0, pool size) lets callers keep
/// per-worker accumulators. Only reductions that are exact and order independent (integer sums)
/// may use this form. Returns the pool size.
template <class Fn>
int for_each_chunk(std::int64_t chunks, int workers, Fn&& fn) {
    const int pool = std::max(1, std::min<int>(resolve_workers(workers),
                                               static_cast<int>(std::max<std::int64_t>(chunks, 1))));
    std::atomic<std::int64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&](int id) {
        for (;;) {
            const std::int64_t chunk = next.fetch_add(1);
            if (chunk >= chunks) return;
            try {
                fn(chunk, id);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next.store(chunks);
                return;
            }
        }
    };

    if (pool == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> threads;
        threads.reserve(static_cast<std::size_t>(pool));
        for (int t = 0; t < pool; ++t) threads.emplace_back(worker, t);
    }
    if (failure) std::rethrow_exception(failure);
    return pool;
}

/// Pool size for_each_chunk will use.
inline int chunk_pool_size(std::int64_t chunks, int workers) {
    return std::max(1, std::min<int>(resolve_workers(workers),
                                     static_cast<int>(std::max<std::int64_t>(chunks, 1))));
}

}  // namespace geocorr
