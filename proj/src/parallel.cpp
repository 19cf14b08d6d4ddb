#include "dsde/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace dsde {

int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) hw = 1;
    if (const char* cap = std::getenv("DSDE_THREADS")) {
        try {
            int requested = std::stoi(cap);
            if (requested >= 1) hw = std::min(hw, requested);
        } catch (...) {
            // Unparseable cap: fall through to the hardware count.
        }
    }
    return std::max(hw, 1);
}

void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body) {
    const int workers = worker_count();
    if (count == 0) return;
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
    const std::size_t nThreads = std::min<std::size_t>(workers, count);
    std::vector<std::thread> pool;
    pool.reserve(nThreads);
    std::exception_ptr firstError;
    std::mutex errorLock;
    // Contiguous blocks: thread t handles [t*chunk, min((t+1)*chunk, count)).
    const std::size_t chunk = (count + nThreads - 1) / nThreads;
    for (std::size_t t = 0; t < nThreads; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&body, &firstError, &errorLock, lo, hi]() {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                std::lock_guard<std::mutex> guard(errorLock);
                if (!firstError) firstError = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (firstError) std::rethrow_exception(firstError);
}

} // namespace dsde
