#pragma once

// Task graph of the tiled QR factorization.
//
// Nodes are kernel invocations on tiles, created in the loop order of the
// sequential algorithm. Edges follow the tiles each kernel reads and writes:
//
//   G(k)     <- S(k-1, k, k)
//   L(k,j)   <- G(k), S(k-1, k, j)
//   T(k,i)   <- G(k) if i == k+1 else T(k, i-1); S(k-1, i, k)
//   S(k,i,j) <- T(k,i); L(k,j) if i == k+1 else S(k, i-1, j); S(k-1, i, j)
//
// (terms with k-1 only exist for k > 0). All indices are zero-based.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "tileqr/kernels.hpp"

namespace tileqr {

/// One kernel invocation. (i, j) is the tile the kernel writes as its main
/// operand: G(k) -> (k,k), L(k,j) -> (k,j), T(k,i) -> (i,k), S(k,i,j) -> (i,j).
struct Task {
  KernelKind kind = KernelKind::geqt2;
  int k = 0;
  int i = 0;
  int j = 0;

  static Task G(int k) { return {KernelKind::geqt2, k, k, k}; }
  static Task L(int k, int j) { return {KernelKind::larfb, k, k, j}; }
  static Task T(int k, int i) { return {KernelKind::tsqt2, k, i, k}; }
  static Task S(int k, int i, int j) { return {KernelKind::ssrfb, k, i, j}; }

  friend bool operator==(const Task&, const Task&) = default;
};

inline char task_letter(KernelKind kind) {
  switch (kind) {
    case KernelKind::geqt2: return 'G';
    case KernelKind::larfb: return 'L';
    case KernelKind::tsqt2: return 'T';
    case KernelKind::ssrfb: return 'S';
  }
  return '?';
}

inline std::string to_string(const Task& t) {
  std::ostringstream os;
  os << task_letter(t.kind) << '(' << t.k;
  switch (t.kind) {
    case KernelKind::geqt2: break;
    case KernelKind::larfb: os << ',' << t.j; break;
    case KernelKind::tsqt2: os << ',' << t.i; break;
    case KernelKind::ssrfb: os << ',' << t.i << ',' << t.j; break;
  }
  os << ')';
  return os.str();
}

/// Static critical-path class: GEQT2 first, then TSQT2, LARFB, SSRFB.
/// Lower values are scheduled first.
inline int priority_of(const Task& t) {
  switch (t.kind) {
    case KernelKind::geqt2: return 0;
    case KernelKind::tsqt2: return 1;
    case KernelKind::larfb: return 2;
    case KernelKind::ssrfb: return 3;
  }
  return 4;
}

class TaskGraph {
 public:
  TaskGraph() = default;
  TaskGraph(std::size_t p, std::size_t q) : p_(p), q_(q) {}

  std::size_t p() const { return p_; }
  std::size_t q() const { return q_; }
  std::size_t size() const { return tasks_.size(); }
  std::size_t edge_count() const {
    std::size_t e = 0;
    for (const auto& s : successors_) e += s.size();
    return e;
  }

  const Task& task(std::size_t id) const { return tasks_.at(id); }
  const std::vector<Task>& tasks() const { return tasks_; }
  const std::vector<int>& successors(std::size_t id) const { return successors_.at(id); }
  const std::vector<int>& predecessors(std::size_t id) const { return predecessors_.at(id); }
  /// Number of prerequisites before any task has run.
  int indegree(std::size_t id) const { return static_cast<int>(predecessors_.at(id).size()); }

  std::optional<int> find(const Task& t) const {
    auto it = index_.find(key(t));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  int id_of(const Task& t) const {
    auto id = find(t);
    if (!id) throw std::invalid_argument("task " + to_string(t) + " not in graph");
    return *id;
  }
  bool has_edge(const Task& from, const Task& to) const {
    const auto& s = successors_.at(id_of(from));
    return std::find(s.begin(), s.end(), id_of(to)) != s.end();
  }

  int add_task(const Task& t) {
    const int id = static_cast<int>(tasks_.size());
    if (!index_.emplace(key(t), id).second) throw std::invalid_argument("duplicate task " + to_string(t));
    tasks_.push_back(t);
    successors_.emplace_back();
    predecessors_.emplace_back();
    return id;
  }

  void add_edge(int from, int to) {
    auto& s = successors_.at(from);
    if (std::find(s.begin(), s.end(), to) != s.end()) return;
    s.push_back(to);
    predecessors_.at(to).push_back(from);
  }
  void add_edge(const Task& from, const Task& to) { add_edge(id_of(from), id_of(to)); }

  /// Returns whether the edge existed.
  bool remove_edge(const Task& from, const Task& to) {
    const int f = id_of(from), t = id_of(to);
    auto& s = successors_[f];
    auto it = std::find(s.begin(), s.end(), t);
    if (it == s.end()) return false;
    s.erase(it);
    auto& pr = predecessors_[t];
    pr.erase(std::find(pr.begin(), pr.end(), f));
    return true;
  }

 private:
  static std::uint64_t key(const Task& t) {
    return (static_cast<std::uint64_t>(t.kind) << 60) | (static_cast<std::uint64_t>(t.k) << 40) |
           (static_cast<std::uint64_t>(t.i) << 20) | static_cast<std::uint64_t>(t.j);
  }

  std::size_t p_ = 0, q_ = 0;
  std::vector<Task> tasks_;
  std::vector<std::vector<int>> successors_;
  std::vector<std::vector<int>> predecessors_;
  std::unordered_map<std::uint64_t, int> index_;
};

inline TaskGraph build_dag(std::size_t p, std::size_t q) {
  if (p == 0 || q == 0) throw std::invalid_argument("build_dag: requires p, q >= 1");
  if (p >= (1u << 20) || q >= (1u << 20)) throw std::invalid_argument("build_dag: grid too large");
  TaskGraph g(p, q);
  const int P = static_cast<int>(p), Q = static_cast<int>(q);
  for (int k = 0; k < std::min(P, Q); ++k) {
    g.add_task(Task::G(k));
    for (int j = k + 1; j < Q; ++j) g.add_task(Task::L(k, j));
    for (int i = k + 1; i < P; ++i) {
      g.add_task(Task::T(k, i));
      for (int j = k + 1; j < Q; ++j) g.add_task(Task::S(k, i, j));
    }
  }
  for (int k = 0; k < std::min(P, Q); ++k) {
    if (k > 0) g.add_edge(Task::S(k - 1, k, k), Task::G(k));
    for (int j = k + 1; j < Q; ++j) {
      g.add_edge(Task::G(k), Task::L(k, j));
      if (k > 0) g.add_edge(Task::S(k - 1, k, j), Task::L(k, j));
    }
    for (int i = k + 1; i < P; ++i) {
      g.add_edge(i == k + 1 ? Task::G(k) : Task::T(k, i - 1), Task::T(k, i));
      if (k > 0) g.add_edge(Task::S(k - 1, i, k), Task::T(k, i));
      for (int j = k + 1; j < Q; ++j) {
        g.add_edge(Task::T(k, i), Task::S(k, i, j));
        g.add_edge(i == k + 1 ? Task::L(k, j) : Task::S(k, i - 1, j), Task::S(k, i, j));
        if (k > 0) g.add_edge(Task::S(k - 1, i, j), Task::S(k, i, j));
      }
    }
  }
  return g;
}

/// Closed-form node count: sum_k [1 + (q-k) + (p-k) + (p-k)(q-k)], k = 1..min(p,q).
inline std::size_t dag_node_count(std::size_t p, std::size_t q) {
  std::size_t n = 0;
  for (std::size_t k = 1; k <= std::min(p, q); ++k) n += 1 + (q - k) + (p - k) + (p - k) * (q - k);
  return n;
}

/// Kahn's algorithm; nullopt when the graph has a cycle.
inline std::optional<std::vector<int>> topological_order(const TaskGraph& g) {
  std::vector<int> indeg(g.size());
  std::vector<int> order;
  order.reserve(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    indeg[v] = g.indegree(v);
    if (indeg[v] == 0) order.push_back(static_cast<int>(v));
  }
  for (std::size_t head = 0; head < order.size(); ++head)
    for (int s : g.successors(order[head]))
      if (--indeg[s] == 0) order.push_back(s);
  if (order.size() != g.size()) return std::nullopt;
  return order;
}

/// Part of a matrix tile touched by a kernel. The diagonal tile is shared
/// by R (upper triangle, diagonal included) and V_kk (strict lower part).
enum class TileRegion : std::uint8_t { full, upper, strict_lower };

struct TileAccess {
  bool t_factor = false;  // T grid rather than the matrix
  int i = 0, j = 0;
  TileRegion region = TileRegion::full;
  bool write = false;
};

/// Read and write sets of each kernel, from its signature.
inline std::vector<TileAccess> accesses_of(const Task& t) {
  const int k = t.k, i = t.i, j = t.j;
  switch (t.kind) {
    case KernelKind::geqt2:
      return {{false, k, k, TileRegion::full, true}, {true, k, k, TileRegion::full, true}};
    case KernelKind::larfb:
      return {{false, k, k, TileRegion::strict_lower, false},
              {true, k, k, TileRegion::full, false},
              {false, k, j, TileRegion::full, true}};
    case KernelKind::tsqt2:
      return {{false, k, k, TileRegion::upper, true},
              {false, i, k, TileRegion::full, true},
              {true, i, k, TileRegion::full, true}};
    case KernelKind::ssrfb:
      return {{false, k, j, TileRegion::full, true},
              {false, i, j, TileRegion::full, true},
              {false, i, k, TileRegion::full, false},
              {true, i, k, TileRegion::full, false}};
  }
  return {};
}

inline bool conflicts(const TileAccess& a, const TileAccess& b) {
  if (a.t_factor != b.t_factor || a.i != b.i || a.j != b.j) return false;
  if (!a.write && !b.write) return false;
  return a.region == TileRegion::full || b.region == TileRegion::full || a.region == b.region;
}

struct SerializationReport {
  bool ok = true;
  bool acyclic = true;
  std::optional<std::pair<Task, Task>> offending;  // unordered pair
  std::string message() const {
    if (ok) return "ok";
    if (!acyclic) return "graph has a cycle";
    return "no path between conflicting tasks " + to_string(offending->first) + " and " +
           to_string(offending->second);
  }
};

/// Checks that every pair of tasks with a read/write or write/write overlap
/// on some tile region is ordered by a directed path.
inline SerializationReport verify_serialization(const TaskGraph& g) {
  SerializationReport rep;
  const auto order = topological_order(g);
  if (!order) {
    rep.ok = false;
    rep.acyclic = false;
    return rep;
  }
  const std::size_t n = g.size(), words = (n + 63) / 64;
  // reach[v] = set of nodes reachable from v (descendants).
  std::vector<std::vector<std::uint64_t>> reach(n, std::vector<std::uint64_t>(words, 0));
  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    auto& rv = reach[*it];
    for (int s : g.successors(*it)) {
      rv[s / 64] |= std::uint64_t{1} << (s % 64);
      for (std::size_t w = 0; w < words; ++w) rv[w] |= reach[s][w];
    }
  }
  auto reaches = [&](std::size_t a, std::size_t b) { return (reach[a][b / 64] >> (b % 64)) & 1u; };

  std::vector<std::vector<TileAccess>> acc(n);
  for (std::size_t v = 0; v < n; ++v) acc[v] = accesses_of(g.task(v));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      bool clash = false;
      for (const auto& x : acc[a]) {
        for (const auto& y : acc[b])
          if (conflicts(x, y)) {
            clash = true;
            break;
          }
        if (clash) break;
      }
      if (clash && !reaches(a, b) && !reaches(b, a)) {
        rep.ok = false;
        rep.offending = std::make_pair(g.task(a), g.task(b));
        return rep;
      }
    }
  return rep;
}

/// Graphviz export, one "A -> B" edge per line.
inline void write_dot(std::ostream& out, const TaskGraph& g) {
  out << "digraph tiled_qr {\n";
  for (std::size_t v = 0; v < g.size(); ++v)
    if (g.indegree(v) == 0 && g.successors(v).empty()) out << "  \"" << to_string(g.task(v)) << "\";\n";
  for (std::size_t v = 0; v < g.size(); ++v)
    for (int s : g.successors(v))
      out << "  \"" << to_string(g.task(v)) << "\" -> \"" << to_string(g.task(s)) << "\";\n";
  out << "}\n";
}

}  // namespace tileqr
