#pragma once

// Graph-driven execution: workers repeatedly take the best ready task,
// run it and release its successors. Ready tasks are ordered by priority
// class, then step k, then arrival order.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <exception>
#include <mutex>
#include <queue>
#include <stdexcept>
#include <thread>
#include <vector>

#include "tileqr/dag.hpp"
#include "tileqr/trace.hpp"

namespace tileqr {

namespace detail {

struct ReadyEntry {
  int priority;
  int k;
  std::uint64_t seq;
  int node;
};

struct ReadyAfter {
  bool operator()(const ReadyEntry& a, const ReadyEntry& b) const {
    if (a.priority != b.priority) return a.priority > b.priority;
    if (a.k != b.k) return a.k > b.k;
    return a.seq > b.seq;
  }
};

}  // namespace detail

/// Runs every node of g exactly once with `workers` threads, calling
/// execute(task) and never starting a task before all its predecessors
/// have finished. Fills trace when given. Exceptions from execute stop the
/// run and are rethrown.
template <typename Execute>
void run_graph(const TaskGraph& g, std::size_t workers, Execute&& execute, ExecutionTrace* trace = nullptr) {
  if (workers == 0) throw std::invalid_argument("run_graph: workers must be >= 1");
  using clock = std::chrono::steady_clock;
  const std::size_t n = g.size();

  std::vector<std::atomic<int>> pending(n);
  std::priority_queue<detail::ReadyEntry, std::vector<detail::ReadyEntry>, detail::ReadyAfter> ready;
  std::uint64_t seq = 0;
  for (std::size_t v = 0; v < n; ++v) {
    pending[v].store(g.indegree(v), std::memory_order_relaxed);
    if (g.indegree(v) == 0) {
      const Task& t = g.task(v);
      ready.push({priority_of(t), t.k, seq++, static_cast<int>(v)});
    }
  }

  std::mutex mu;
  std::condition_variable cv;
  std::size_t remaining = n;
  bool failed = false;
  std::exception_ptr error;

  std::vector<std::vector<TraceRecord>> local(workers);
  std::vector<std::int64_t> waited(workers, 0);
  const auto epoch = clock::now();
  auto since = [&](clock::time_point t) {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(t - epoch).count();
  };

  auto worker_loop = [&](std::size_t id) {
    std::vector<int> released;
    for (;;) {
      int node = -1;
      {
        std::unique_lock lock(mu);
        if (ready.empty() && remaining > 0 && !failed) {
          const auto w0 = clock::now();
          cv.wait(lock, [&] { return !ready.empty() || remaining == 0 || failed; });
          waited[id] += since(clock::now()) - since(w0);
        }
        if (failed || ready.empty()) return;
        node = ready.top().node;
        ready.pop();
      }
      const Task& task = g.task(node);
      const auto t0 = clock::now();
      try {
        execute(task);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failed) error = std::current_exception();
        failed = true;
        cv.notify_all();
        return;
      }
      const auto t1 = clock::now();
      if (trace) local[id].push_back({id, task, since(t0), since(t1)});

      released.clear();
      for (int s : g.successors(node))
        if (pending[s].fetch_sub(1, std::memory_order_acq_rel) == 1) released.push_back(s);
      {
        std::lock_guard lock(mu);
        for (int s : released) {
          const Task& t = g.task(s);
          ready.push({priority_of(t), t.k, seq++, s});
        }
        if (--remaining == 0) {
          cv.notify_all();
        } else {
          for (std::size_t r = 0; r < released.size(); ++r) cv.notify_one();
        }
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker_loop, w);
  }
  if (error) std::rethrow_exception(error);

  if (trace) {
    trace->workers = workers;
    trace->records.clear();
    for (auto& l : local) trace->records.insert(trace->records.end(), l.begin(), l.end());
    std::sort(trace->records.begin(), trace->records.end(), [](const TraceRecord& a, const TraceRecord& b) {
      return a.start_ns != b.start_ns ? a.start_ns < b.start_ns : a.worker < b.worker;
    });
    trace->wait_ns = std::move(waited);
    trace->wall_ns = since(clock::now());
  }
}

}  // namespace tileqr
