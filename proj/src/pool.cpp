#include "barm/pool.hpp"

namespace barm {

WorkerPool::WorkerPool(int workers) {
    if (workers <= 1) return;
    for (int i = 0; i < workers; ++i) threads_.emplace_back([this] { worker_loop(); });
}

WorkerPool::~WorkerPool() {
    {
        std::lock_guard lock(mu_);
        stop_ = true;
    }
    work_cv_.notify_all();
    for (auto& t : threads_) t.join();
}

void WorkerPool::parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    if (count == 0) return;
    if (threads_.empty()) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::unique_lock lock(mu_);
    fn_ = &fn;
    count_ = count;
    next_ = 0;
    finished_ = 0;
    error_ = nullptr;
    ++generation_;
    work_cv_.notify_all();
    done_cv_.wait(lock, [&] { return finished_ == count_; });
    fn_ = nullptr;
    if (error_) std::rethrow_exception(error_);
}

void WorkerPool::worker_loop() {
    std::size_t seen = 0;
    std::unique_lock lock(mu_);
    for (;;) {
        work_cv_.wait(lock, [&] { return stop_ || (generation_ != seen && fn_ != nullptr && next_ < count_); });
        if (stop_) return;
        while (fn_ != nullptr && next_ < count_) {
            const std::size_t i = next_++;
            const auto* fn = fn_;
            lock.unlock();
            std::exception_ptr err;
            try {
                (*fn)(i);
            } catch (...) {
                err = std::current_exception();
            }
            lock.lock();
            if (err && !error_) error_ = err;
            if (++finished_ == count_) done_cv_.notify_all();
        }
        seen = generation_;
    }
}

}  // namespace barm
