#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "tileqr/dag.hpp"

namespace tileqr {

/// One executed task. Times are nanoseconds of a monotonic clock, relative
/// to the start of the run.
struct TraceRecord {
  std::size_t worker = 0;
  Task task;
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
};

struct ExecutionTrace {
  std::size_t workers = 0;
  std::vector<TraceRecord> records;  // sorted by (start_ns, worker)
  /// Time each worker spent blocked on an empty ready queue.
  std::vector<std::int64_t> wait_ns;
  std::int64_t wall_ns = 0;
};

struct TraceSummary {
  std::int64_t makespan_ns = 0;
  std::vector<double> busy_fraction;  // per worker, task time / makespan
  double idle_fraction = 0.0;         // waiting time / (workers * makespan)
};

/// Idle time is the time workers spend waiting for a ready task, so a single
/// worker is never idle. Gaps that are pure scheduling overhead count as
/// neither busy nor idle.
inline TraceSummary summarize(const ExecutionTrace& trace) {
  TraceSummary s;
  s.busy_fraction.assign(trace.workers, 0.0);
  for (const auto& r : trace.records) s.makespan_ns = std::max(s.makespan_ns, r.end_ns);
  if (s.makespan_ns <= 0 || trace.workers == 0) return s;
  std::vector<std::int64_t> busy(trace.workers, 0);
  for (const auto& r : trace.records) busy.at(r.worker) += r.end_ns - r.start_ns;
  std::int64_t waited = 0;
  for (auto w : trace.wait_ns) waited += w;
  const double span = static_cast<double>(s.makespan_ns);
  for (std::size_t w = 0; w < trace.workers; ++w) s.busy_fraction[w] = static_cast<double>(busy[w]) / span;
  s.idle_fraction = std::min(1.0, static_cast<double>(waited) / (span * static_cast<double>(trace.workers)));
  return s;
}

/// Per-worker intervals must be disjoint and in time order.
inline bool intervals_disjoint(const ExecutionTrace& trace) {
  std::vector<std::int64_t> last_end(trace.workers, -1);
  std::vector<TraceRecord> sorted = trace.records;
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const TraceRecord& a, const TraceRecord& b) { return a.start_ns < b.start_ns; });
  for (const auto& r : sorted) {
    if (r.worker >= trace.workers || r.end_ns < r.start_ns || r.start_ns < last_end[r.worker]) return false;
    last_end[r.worker] = r.end_ns;
  }
  return true;
}

/// JSON lines: {"worker":0,"kind":"GEQT2","k":0,"i":0,"j":0,"start_ns":..,"end_ns":..}
inline void write_trace_jsonl(std::ostream& out, const ExecutionTrace& trace) {
  for (const auto& r : trace.records) {
    out << "{\"worker\":" << r.worker << ",\"kind\":\"" << kernel_name(r.task.kind) << "\",\"k\":" << r.task.k
        << ",\"i\":" << r.task.i << ",\"j\":" << r.task.j << ",\"start_ns\":" << r.start_ns
        << ",\"end_ns\":" << r.end_ns << "}\n";
  }
}

}  // namespace tileqr
