// Copyright (c) 2026 The causalflow Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "causalflow/errors.hpp"

namespace causalflow {

using Edge = std::pair<std::size_t, std::size_t>;  // (parent, child)

/// Time-invariant causal graph. An edge p -> c is a lag-1 influence of
/// X_{p,t-1} on X_{c,t}. Immutable once built.
class CausalDag {
 public:
  CausalDag() = default;

  [[nodiscard]] std::size_t node_count() const noexcept { return parents_.size(); }
  [[nodiscard]] const std::vector<std::size_t>& topo_order() const noexcept { return topo_; }

  [[nodiscard]] const std::vector<std::size_t>& parents_of(std::size_t node) const {
    check_node(node);
    return parents_[node];
  }

  [[nodiscard]] const std::vector<std::size_t>& children_of(std::size_t node) const {
    check_node(node);
    return children_[node];
  }

  [[nodiscard]] bool is_root(std::size_t node) const { return parents_of(node).empty(); }

  [[nodiscard]] std::vector<std::size_t> roots() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < node_count(); ++i)
      if (parents_[i].empty()) out.push_back(i);
    return out;
  }

  /// All edges, sorted by (parent, child).
  [[nodiscard]] std::vector<Edge> edges() const {
    std::vector<Edge> out;
    for (std::size_t c = 0; c < node_count(); ++c)
      for (auto p : parents_[c]) out.emplace_back(p, c);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Position of each node within topo_order().
  [[nodiscard]] std::vector<std::size_t> topo_position() const {
    std::vector<std::size_t> pos(node_count());
    for (std::size_t k = 0; k < topo_.size(); ++k) pos[topo_[k]] = k;
    return pos;
  }

  bool operator==(const CausalDag&) const = default;

  friend CausalDag build_dag(std::size_t node_count, std::span<const Edge> edges);

 private:
  void check_node(std::size_t node) const {
    require(node < node_count(), ErrorCode::IndexOutOfRange,
            "node " + std::to_string(node) + " outside 0.." + std::to_string(node_count()));
  }

  std::vector<std::vector<std::size_t>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
};

/// Validates the edge list and computes a canonical topological order
/// (Kahn's algorithm with a min-index frontier).
inline CausalDag build_dag(std::size_t node_count, std::span<const Edge> edges) {
  require(node_count > 0, ErrorCode::IndexOutOfRange, "DAG needs at least one node");
  CausalDag dag;
  dag.parents_.assign(node_count, {});
  dag.children_.assign(node_count, {});
  std::set<Edge> seen;
  for (const auto& [p, c] : edges) {
    require(p < node_count && c < node_count, ErrorCode::IndexOutOfRange,
            "edge (" + std::to_string(p) + "," + std::to_string(c) + ") out of range");
    require(p != c, ErrorCode::CycleDetected, "self-loop on node " + std::to_string(p));
    require(seen.insert({p, c}).second, ErrorCode::DuplicateEdge,
            "duplicate edge (" + std::to_string(p) + "," + std::to_string(c) + ")");
    dag.parents_[c].push_back(p);
    dag.children_[p].push_back(c);
  }
  for (auto& v : dag.parents_) std::sort(v.begin(), v.end());
  for (auto& v : dag.children_) std::sort(v.begin(), v.end());

  std::vector<std::size_t> indegree(node_count);
  for (std::size_t c = 0; c < node_count; ++c) indegree[c] = dag.parents_[c].size();
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> frontier;
  for (std::size_t i = 0; i < node_count; ++i)
    if (indegree[i] == 0) frontier.push(i);
  while (!frontier.empty()) {
    const auto n = frontier.top();
    frontier.pop();
    dag.topo_.push_back(n);
    for (auto c : dag.children_[n])
      if (--indegree[c] == 0) frontier.push(c);
  }
  require(dag.topo_.size() == node_count, ErrorCode::CycleDetected, "edge set contains a cycle");
  return dag;
}

inline CausalDag build_dag(std::size_t node_count, std::initializer_list<Edge> edges) {
  return build_dag(node_count, std::span<const Edge>(edges.begin(), edges.size()));
}

inline CausalDag build_dag(std::size_t node_count, const std::vector<Edge>& edges) {
  return build_dag(node_count, std::span<const Edge>(edges));
}

// Canonical graphs of the four synthetic families.

/// 8 nodes; root 0 with a binary fan-out.
inline CausalDag tree_dag() {
  return build_dag(8, {{0, 1}, {0, 2}, {1, 3}, {1, 4}, {2, 5}, {2, 6}, {3, 7}});
}

/// 10 nodes; three stacked diamonds sharing their tips.
inline CausalDag diamond_dag() {
  return build_dag(10, {{0, 1}, {0, 2}, {1, 3}, {2, 3}, {3, 4}, {3, 5}, {4, 6}, {5, 6},
                        {6, 7}, {6, 8}, {7, 9}, {8, 9}});
}

/// 10 nodes in layers {0,1,2} -> {3,4,5} -> {6,7,8,9}, fully connected between
/// consecutive layers.
inline CausalDag fc_layer_dag() {
  std::vector<Edge> edges;
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t c = 3; c < 6; ++c) edges.emplace_back(p, c);
  for (std::size_t p = 3; p < 6; ++p)
    for (std::size_t c = 6; c < 10; ++c) edges.emplace_back(p, c);
  return build_dag(10, edges);
}

/// `n` nodes in a line with a skip edge i -> i+2 from every even node.
inline CausalDag chain_dag(std::size_t n = 50) {
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    edges.emplace_back(i, i + 1);
    if (i % 2 == 0 && i + 2 < n) edges.emplace_back(i, i + 2);
  }
  return build_dag(n, edges);
}

/// Sparse do-schedule over the forecast window. Times are 0-based indices
/// into a window of length total_len; valid times are [context_len, total_len).
class InterventionSchedule {
 public:
  InterventionSchedule() = default;
  InterventionSchedule(std::size_t context_len, std::size_t total_len)
      : context_len_(context_len), total_len_(total_len) {
    require(context_len < total_len, ErrorCode::ScheduleOutOfWindow,
            "context length must be shorter than the window");
  }

  void set(std::size_t node, std::size_t t, double value) {
    require(t >= context_len_ && t < total_len_, ErrorCode::ScheduleOutOfWindow,
            "time " + std::to_string(t) + " outside forecast window [" +
                std::to_string(context_len_) + "," + std::to_string(total_len_) + ")");
    entries_[{node, t}] = value;
  }

  [[nodiscard]] std::optional<double> lookup(std::size_t node, std::size_t t) const {
    if (auto it = entries_.find({node, t}); it != entries_.end()) return it->second;
    return std::nullopt;
  }

  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] std::size_t context_len() const noexcept { return context_len_; }
  [[nodiscard]] std::size_t total_len() const noexcept { return total_len_; }
  [[nodiscard]] const std::map<std::pair<std::size_t, std::size_t>, double>& entries() const noexcept {
    return entries_;
  }

  /// Nodes that are clamped at least once.
  [[nodiscard]] std::vector<std::size_t> nodes() const {
    std::set<std::size_t> s;
    for (const auto& [key, v] : entries_) s.insert(key.first);
    return {s.begin(), s.end()};
  }

  void check_nodes(std::size_t node_count) const {
    for (const auto& [key, v] : entries_)
      require(key.first < node_count, ErrorCode::IndexOutOfRange,
              "schedule names node " + std::to_string(key.first));
  }

  bool operator==(const InterventionSchedule&) const = default;

 private:
  std::size_t context_len_ = 0;
  std::size_t total_len_ = 1;
  std::map<std::pair<std::size_t, std::size_t>, double> entries_;
};

}  // namespace causalflow
