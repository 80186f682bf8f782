#include "mssr/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstdlib>
#include <mutex>
#include <thread>
#include <vector>

namespace mssr {

namespace {

int env_thread_cap() {
    const char* raw = std::getenv("MSSRNET_THREADS");
    if (raw == nullptr) {
        return 0;
    }
    const int value = std::atoi(raw);
    return value > 0 ? value : 0;
}

int default_thread_count() {
    int count = static_cast<int>(std::thread::hardware_concurrency());
    if (count < 1) {
        count = 1;
    }
    const int cap = env_thread_cap();
    if (cap > 0) {
        count = std::min(count, cap);
    }
    return count;
}

thread_local bool t_inside_worker = false;

// Persistent pool of max_threads()-1 workers. The calling thread always
// executes chunk 0 itself, so a cap of 1 runs everything inline.
class Pool {
public:
    static Pool& instance() {
        static Pool pool;
        return pool;
    }

    int cap() const { return cap_; }

    void set_cap(int count) {
        std::unique_lock<std::mutex> guard(run_mutex_);
        cap_ = std::max(1, count);
        resize_locked(cap_ - 1);
    }

    void run(std::size_t items, const std::function<void(std::size_t, std::size_t)>& fn) {
        if (items == 0) {
            return;
        }
        if (t_inside_worker) {
            fn(0, items);
            return;
        }
        std::unique_lock<std::mutex> run_guard(run_mutex_);
        const std::size_t lanes = std::min<std::size_t>(static_cast<std::size_t>(cap_), items);
        if (lanes <= 1) {
            fn(0, items);
            return;
        }
        resize_locked(static_cast<int>(lanes) - 1);

        // Every live worker participates in the countdown; lanes beyond the
        // chunked range see an empty span and fall through.
        const std::size_t chunk = (items + lanes - 1) / lanes;
        {
            std::lock_guard<std::mutex> guard(mutex_);
            job_ = [&fn, chunk, items](int lane) {
                const std::size_t begin = static_cast<std::size_t>(lane) * chunk;
                const std::size_t end = std::min(items, begin + chunk);
                if (begin < end) {
                    fn(begin, end);
                }
            };
            pending_.store(static_cast<int>(workers_.size()), std::memory_order_relaxed);
            ++generation_;
        }
        start_cv_.notify_all();

        t_inside_worker = true;
        job_(0);
        t_inside_worker = false;

        std::unique_lock<std::mutex> guard(mutex_);
        done_cv_.wait(guard, [this] { return pending_.load(std::memory_order_acquire) == 0; });
        job_ = nullptr;
    }

private:
    Pool() : cap_(default_thread_count()) {}

    ~Pool() {
        {
            std::lock_guard<std::mutex> guard(mutex_);
            stopping_ = true;
            ++generation_;
        }
        start_cv_.notify_all();
        for (auto& t : workers_) {
            t.join();
        }
    }

    // Caller must hold run_mutex_.
    void resize_locked(int worker_count) {
        if (static_cast<int>(workers_.size()) >= worker_count) {
            return;
        }
        while (static_cast<int>(workers_.size()) < worker_count) {
            const int lane = static_cast<int>(workers_.size()) + 1;
            workers_.emplace_back([this, lane] { worker_loop(lane); });
        }
    }

    void worker_loop(int lane) {
        t_inside_worker = true;
        std::uint64_t seen = 0;
        while (true) {
            std::function<void(int)> job;
            {
                std::unique_lock<std::mutex> guard(mutex_);
                start_cv_.wait(guard, [&] { return stopping_ || generation_ != seen; });
                seen = generation_;
                if (stopping_) {
                    return;
                }
                job = job_;
            }
            if (job) {
                job(lane);
                if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                    std::lock_guard<std::mutex> guard(mutex_);
                    done_cv_.notify_all();
                }
            }
        }
    }

    std::mutex run_mutex_;  // serializes parallel sections
    std::mutex mutex_;
    std::condition_variable start_cv_;
    std::condition_variable done_cv_;
    std::vector<std::thread> workers_;
    std::function<void(int)> job_;
    std::atomic<int> pending_{0};
    std::uint64_t generation_ = 0;
    bool stopping_ = false;
    int cap_;
};

}  // namespace

int max_threads() { return Pool::instance().cap(); }

void set_max_threads(int count) { Pool::instance().set_cap(count); }

void parallel_chunks(std::size_t items, const std::function<void(std::size_t, std::size_t)>& fn) {
    Pool::instance().run(items, fn);
}

}  // namespace mssr
