#ifndef EIGENINFER_MC_HPP
#define EIGENINFER_MC_HPP

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace eigeninfer {

/// Worker count for trial-level parallelism, capped by EIGENINFER_THREADS.
inline int thread_budget() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("EIGENINFER_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw;
}

/// Runs f(trial) for trial = 0..trials-1 across threads, collecting results
/// in trial order. Each trial must derive its own RNG substream from its
/// index, so the outcome is independent of scheduling.
template <class T, class F>
std::vector<T> run_trials(int trials, F&& f) {
    std::vector<T> out(static_cast<std::size_t>(trials));
    const int workers = std::min(thread_budget(), trials > 0 ? trials : 1);
    if (workers <= 1) {
        for (int t = 0; t < trials; ++t) out[static_cast<std::size_t>(t)] = f(t);
        return out;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            for (int t = next.fetch_add(1); t < trials; t = next.fetch_add(1))
                out[static_cast<std::size_t>(t)] = f(t);
        });
    for (auto& th : pool) th.join();
    return out;
}

}  // namespace eigeninfer

#endif
