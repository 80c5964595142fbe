#pragma once

#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace oos {

/// SplitMix64 finalizer; the basis of all seed derivation in this library.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based stream derivation: (master, stream, index) -> engine seed.
/// Each (stream, index) pair owns an independent seed regardless of how work
/// is scheduled, so results never depend on the worker count.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index);
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

/// Worker count for replicate-parallel loops: the explicit request if given,
/// otherwise hardware concurrency, both capped by the OOS_THREADS environment
/// variable. Affects speed only, never results.
inline unsigned worker_count(std::optional<unsigned> requested = {}) {
    unsigned workers = requested.value_or(std::thread::hardware_concurrency());
    if (workers == 0) workers = 1;
    if (const char* env = std::getenv("OOS_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1 && static_cast<unsigned>(cap) < workers) workers = static_cast<unsigned>(cap);
    }
    return workers;
}

/// Runs body(i) for i in [0, count) across `workers` threads in contiguous
/// chunks. Callers make results deterministic by writing into index i of a
/// preallocated buffer and reducing in index order afterwards.
template <typename F>
void parallel_for_indexed(std::size_t count, unsigned workers, F&& body) {
    if (workers <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    if (workers > count) workers = static_cast<unsigned>(count);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            const std::size_t begin = count * w / workers;
            const std::size_t end = count * (w + 1) / workers;
            pool.emplace_back([&, begin, end] {
                try {
                    for (std::size_t i = begin; i < end; ++i) body(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace oos
