#include "rasr/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace rasr {

Real compensated_sum(const Real* values, size_t n) {
    Real sum = 0.0;
    Real comp = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const Real v = values[i];
        const Real t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    return sum + comp;
}

namespace {

size_t initial_thread_cap() {
    if (const char* env = std::getenv("RASR_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v > 0) return static_cast<size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

std::atomic<size_t>& thread_cap() {
    static std::atomic<size_t> cap{initial_thread_cap()};
    return cap;
}

} // namespace

size_t max_threads() { return thread_cap().load(std::memory_order_relaxed); }

void set_max_threads(size_t n) {
    thread_cap().store(n == 0 ? 1 : n, std::memory_order_relaxed);
}

void parallel_chunks(size_t begin, size_t end, size_t grain,
                     const std::function<void(size_t, size_t)>& fn) {
    if (begin >= end) return;
    const size_t total = end - begin;
    const size_t cap = max_threads();
    size_t workers = std::min(cap, grain != 0 ? total / grain : total);
    if (workers <= 1) {
        fn(begin, end);
        return;
    }
    // Static partition: chunk boundaries depend only on (begin, end, workers).
    const size_t chunk = (total + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        const size_t lo = begin + w * chunk;
        if (lo >= end) break;
        const size_t hi = std::min(end, lo + chunk);
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

} // namespace rasr
