#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cabl::detail {

// Shared worker pool behind the kernels. Work is handed out as indexed tasks;
// values produced by a task are keyed by its index, so results do not depend
// on which worker happens to run it. A single-task batch runs entirely on the
// calling thread and never touches the pool.
class ThreadPool {
public:
    static ThreadPool& instance() {
        static ThreadPool pool;
        return pool;
    }

    ThreadPool(const ThreadPool&) = delete;
    ThreadPool& operator=(const ThreadPool&) = delete;

    // Runs fn(0) .. fn(n_tasks-1) and blocks until all of them finished.
    // The calling thread executes task 0 and then helps drain the rest, so
    // batches make progress even with fewer workers than tasks. The first
    // exception thrown by any task is rethrown here.
    void run(unsigned n_tasks, const std::function<void(unsigned)>& fn) {
        if (n_tasks <= 1) {
            if (n_tasks == 1) fn(0);
            return;
        }
        if (inside_task) {
            // Nested parallel region: execute inline rather than deadlocking
            // on the batch lock below.
            for (unsigned t = 0; t < n_tasks; ++t) fn(t);
            return;
        }

        std::lock_guard<std::mutex> batch_guard(batch_mu_); // one batch at a time

        {
            std::lock_guard<std::mutex> lk(mu_);
            ensure_workers_locked(n_tasks - 1);
            fn_ = &fn;
            next_ = 1;
            end_ = n_tasks;
            pending_ = n_tasks - 1;
            error_ = nullptr;
        }
        work_cv_.notify_all();

        fn(0);
        help_drain();

        std::unique_lock<std::mutex> lk(mu_);
        done_cv_.wait(lk, [&] { return pending_ == 0; });
        fn_ = nullptr;
        if (error_) {
            std::exception_ptr e = error_;
            error_ = nullptr;
            lk.unlock();
            std::rethrow_exception(e);
        }
    }

    ~ThreadPool() {
        {
            std::lock_guard<std::mutex> lk(mu_);
            stop_ = true;
        }
        work_cv_.notify_all();
        for (std::thread& w : workers_) w.join();
    }

private:
    ThreadPool() = default;

    static inline thread_local bool inside_task = false;

    void ensure_workers_locked(unsigned want) {
        while (workers_.size() < want)
            workers_.emplace_back([this] { worker_loop(); });
    }

    void execute(const std::function<void(unsigned)>* fn, unsigned task) {
        std::exception_ptr err;
        inside_task = true;
        try {
            (*fn)(task);
        } catch (...) {
            err = std::current_exception();
        }
        inside_task = false;

        std::unique_lock<std::mutex> lk(mu_);
        if (err && !error_) error_ = err;
        if (--pending_ == 0) {
            lk.unlock();
            done_cv_.notify_all();
        }
    }

    void help_drain() {
        for (;;) {
            const std::function<void(unsigned)>* fn = nullptr;
            unsigned task = 0;
            {
                std::lock_guard<std::mutex> lk(mu_);
                if (!fn_ || next_ >= end_) return;
                task = next_++;
                fn = fn_;
            }
            execute(fn, task);
        }
    }

    void worker_loop() {
        for (;;) {
            const std::function<void(unsigned)>* fn = nullptr;
            unsigned task = 0;
            {
                std::unique_lock<std::mutex> lk(mu_);
                work_cv_.wait(lk, [&] { return stop_ || (fn_ && next_ < end_); });
                if (stop_) return;
                task = next_++;
                fn = fn_;
            }
            execute(fn, task);
        }
    }

    std::mutex batch_mu_;
    std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    const std::function<void(unsigned)>* fn_ = nullptr;
    unsigned next_ = 0;
    unsigned end_ = 0;
    unsigned pending_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

// Splits [0, total) into n_chunks contiguous ranges of ceil(total/n_chunks)
// and runs body(chunk_index, begin, end) for each non-empty one. Returns the
// number of chunks that actually ran.
template <typename Body>
unsigned parallel_chunks(std::uint64_t total, unsigned n_chunks, Body&& body) {
    if (total == 0 || n_chunks == 0) return 0;
    const std::uint64_t chunk = (total + n_chunks - 1) / n_chunks;
    const unsigned used = static_cast<unsigned>((total + chunk - 1) / chunk);
    ThreadPool::instance().run(used, [&](unsigned c) {
        const std::uint64_t begin = static_cast<std::uint64_t>(c) * chunk;
        const std::uint64_t end = std::min(total, begin + chunk);
        body(c, begin, end);
    });
    return used;
}

} // namespace cabl::detail
