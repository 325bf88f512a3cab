#pragma once

// Fixed set of worker threads running blocking parallel-for batches.

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace barm {

class WorkerPool {
public:
    // workers <= 1 runs every batch on the calling thread.
    explicit WorkerPool(int workers);
    ~WorkerPool();

    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    // Calls fn(i) for i in [0, count) and returns when all calls finished. The first
    // exception thrown by any call is rethrown here after the batch drains.
    void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

    int workers() const { return static_cast<int>(threads_.size()); }

private:
    void worker_loop();

    std::vector<std::thread> threads_;
    std::mutex mu_;
    std::condition_variable work_cv_;
    std::condition_variable done_cv_;
    const std::function<void(std::size_t)>* fn_ = nullptr;
    std::size_t count_ = 0;
    std::size_t next_ = 0;
    std::size_t finished_ = 0;
    std::size_t generation_ = 0;
    std::exception_ptr error_;
    bool stop_ = false;
};

}  // namespace barm
