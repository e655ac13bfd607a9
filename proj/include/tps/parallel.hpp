#pragma once

#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tps {

// Minimal persistent pool for data-parallel loops. Work is always split into
// static contiguous ranges, one per worker, so a run with a fixed worker count
// is deterministic; workers=1 degenerates to a plain serial call (the
// bit-determinism mode the CLI documents).
class ThreadPool {
public:
    explicit ThreadPool(int workers) : stop_(false) {
        int extra = workers > 1 ? workers - 1 : 0;
        for (int i = 0; i < extra; ++i)
            threads_.emplace_back([this] { worker_loop(); });
    }

    ~ThreadPool() {
        {
            std::unique_lock<std::mutex> lk(mu_);
            stop_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
    }

    int size() const { return static_cast<int>(threads_.size()) + 1; }

    // fn(begin, end) over [0, n) split into size() contiguous chunks.
    // The calling thread runs chunk 0, so a pool of one never blocks.
    void parallel_for(int64_t n, const std::function<void(int64_t, int64_t)>& fn) {
        int w = size();
        if (n <= 0) return;
        if (w == 1 || n == 1) {
            fn(0, n);
            return;
        }
        if (static_cast<int64_t>(w) > n) w = static_cast<int>(n);
        int64_t chunk = (n + w - 1) / w;
        {
            std::unique_lock<std::mutex> lk(mu_);
            tasks_.clear();
            for (int i = 1; i < w; ++i) {
                int64_t b = i * chunk, e = std::min<int64_t>(n, (i + 1) * chunk);
                if (b < e) tasks_.emplace_back([=, &fn] { fn(b, e); });
            }
            pending_ = tasks_.size();
            next_task_ = 0;
        }
        cv_.notify_all();
        fn(0, std::min<int64_t>(chunk, n));
        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [this] { return pending_ == 0; });
    }

private:
    void worker_loop() {
        for (;;) {
            std::function<void()> task;
            {
                std::unique_lock<std::mutex> lk(mu_);
                cv_.wait(lk, [this] { return stop_ || next_task_ < tasks_.size(); });
                if (stop_) return;
                task = tasks_[next_task_++];
            }
            task();
            {
                std::unique_lock<std::mutex> lk(mu_);
                if (--pending_ == 0) done_cv_.notify_all();
            }
        }
    }

    std::vector<std::thread> threads_;
    std::vector<std::function<void()>> tasks_;
    size_t next_task_ = 0, pending_ = 0;
    std::mutex mu_;
    std::condition_variable cv_, done_cv_;
    bool stop_;
};

// Convenience for one-off loops where no pool is alive.
inline void parallel_for(int workers, int64_t n,
                         const std::function<void(int64_t, int64_t)>& fn) {
    if (workers <= 1 || n <= 1) {
        if (n > 0) fn(0, n);
        return;
    }
    ThreadPool pool(workers);
    pool.parallel_for(n, fn);
}

}  // namespace tps
