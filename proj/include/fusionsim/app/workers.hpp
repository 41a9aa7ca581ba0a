#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "fusionsim/errors.hpp"

namespace fusionsim::app {

/// Worker count: explicit value, else FUSIONSIM_WORKERS, else the hardware thread count.
inline std::size_t resolve_workers(std::optional<long long> requested, const char* env = std::getenv("FUSIONSIM_WORKERS")) {
    if (requested) {
        if (*requested < 1)
            throw ConfigError("--workers", "must be at least 1");
        return static_cast<std::size_t>(*requested);
    }
    if (env && *env) {
        char* end = nullptr;
        const long long v = std::strtoll(env, &end, 10);
        if (*end != '\0' || v < 1)
            throw ConfigError("FUSIONSIM_WORKERS", "must be a positive integer, got '" + std::string(env) + "'");
        return static_cast<std::size_t>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Evaluates fn(0..n-1) on up to `workers` threads. Results are stored by
 * index, so the output does not depend on the worker count. The first
 * exception thrown by any task is rethrown after all threads join.
 */
template <class Fn>
auto parallel_map(std::size_t n, std::size_t workers, Fn&& fn) -> std::vector<decltype(fn(std::size_t{}))> {
    using T = decltype(fn(std::size_t{}));
    std::vector<std::optional<T>> slots(n);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n)
                return;
            try {
                slots[i].emplace(fn(i));
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error)
                    error = std::current_exception();
                next.store(n);
            }
        }
    };
    const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), n);
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(work);
        for (auto& th : pool)
            th.join();
    }
    if (error)
        std::rethrow_exception(error);
    std::vector<T> out;
    out.reserve(n);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

} // namespace fusionsim::app
