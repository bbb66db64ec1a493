#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "treempc/error.hpp"

namespace treempc {

using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct Edge {
  NodeId u;
  NodeId v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable undirected simple forest on dense ids 0..n-1.
///
/// Construction validates symmetry, absence of self-loops and duplicates, and
/// acyclicity (union-find). After that every query is const and the object can
/// be shared freely between concurrently evaluated node programs.
class Forest {
 public:
  Forest() = default;

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }
  std::size_t component_count() const noexcept { return component_sizes_.size(); }

  std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }
  std::size_t degree(NodeId v) const { return adjacency_[v].size(); }

  bool has_edge(NodeId u, NodeId v) const {
    const auto& nb = adjacency_[u];
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  std::uint32_t component(NodeId v) const { return component_of_[v]; }
  std::size_t component_size(NodeId v) const { return component_sizes_[component_of_[v]]; }

  /// Edges with u < v, lexicographically sorted.
  std::vector<Edge> edges() const {
    std::vector<Edge> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < node_count(); ++u) {
      for (NodeId v : adjacency_[u]) {
        if (u < v) out.push_back({u, v});
      }
    }
    return out;
  }

  std::size_t max_degree() const {
    std::size_t best = 0;
    for (const auto& nb : adjacency_) best = std::max(best, nb.size());
    return best;
  }

  friend Forest build_forest(std::span<const Edge> edges, std::size_t n);

 private:
  std::vector<std::vector<NodeId>> adjacency_;
  std::vector<std::uint32_t> component_of_;
  std::vector<std::size_t> component_sizes_;
  std::size_t edge_count_ = 0;
};

namespace detail {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

}  // namespace detail

inline Forest build_forest(std::span<const Edge> edges, std::size_t n) {
  Forest f;
  f.adjacency_.assign(n, {});
  detail::DisjointSets sets(n);
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw Error(ErrorCode::kNodeOutOfRange,
                  "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ") with n=" +
                      std::to_string(n));
    }
    if (e.u == e.v) throw Error(ErrorCode::kSelfLoop, "node " + std::to_string(e.u));
    f.adjacency_[e.u].push_back(e.v);
    f.adjacency_[e.v].push_back(e.u);
  }
  for (NodeId v = 0; v < n; ++v) {
    auto& nb = f.adjacency_[v];
    std::sort(nb.begin(), nb.end());
    if (auto dup = std::adjacent_find(nb.begin(), nb.end()); dup != nb.end()) {
      throw Error(ErrorCode::kDuplicateEdge,
                  "(" + std::to_string(v) + "," + std::to_string(*dup) + ")");
    }
  }
  // Duplicates are ruled out above, so a failed union can only mean a cycle.
  for (const Edge& e : edges) {
    if (!sets.unite(e.u, e.v)) {
      throw Error(ErrorCode::kCycleDetected,
                  "closing edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ")");
    }
  }
  f.edge_count_ = edges.size();

  f.component_of_.assign(n, 0);
  std::vector<std::uint32_t> root_label(n, static_cast<std::uint32_t>(-1));
  for (NodeId v = 0; v < n; ++v) {
    const std::size_t root = sets.find(v);
    if (root_label[root] == static_cast<std::uint32_t>(-1)) {
      root_label[root] = static_cast<std::uint32_t>(f.component_sizes_.size());
      f.component_sizes_.push_back(0);
    }
    f.component_of_[v] = root_label[root];
    ++f.component_sizes_[root_label[root]];
  }
  return f;
}

inline Forest build_forest(std::initializer_list<Edge> edges, std::size_t n) {
  return build_forest(std::span<const Edge>(edges.begin(), edges.size()), n);
}

inline Forest build_forest(const std::vector<Edge>& edges, std::size_t n) {
  return build_forest(std::span<const Edge>(edges), n);
}

/// Induced subforest on `nodes`, relabelled to 0..|nodes|-1 in the given order.
struct InducedForest {
  Forest forest;
  std::vector<NodeId> to_parent;  // local id -> id in the parent forest
};

inline InducedForest induced_subforest(const Forest& f, std::span<const NodeId> nodes) {
  std::vector<NodeId> local(f.node_count(), kNoNode);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<NodeId>(i);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (NodeId w : f.neighbors(nodes[i])) {
      if (local[w] != kNoNode && static_cast<NodeId>(i) < local[w]) {
        edges.push_back({static_cast<NodeId>(i), local[w]});
      }
    }
  }
  return {build_forest(edges, nodes.size()), std::vector<NodeId>(nodes.begin(), nodes.end())};
}

/// Rooted index over every component (root = smallest id of the component).
/// Answers side sizes |F_{v->x}|, first hops r_v(w) and distances in
/// O(log n) after O(n log n) preprocessing.
class TreeIndex {
 public:
  explicit TreeIndex(const Forest& f) : forest_(&f) {
    const std::size_t n = f.node_count();
    parent_.assign(n, kNoNode);
    depth_.assign(n, 0);
    tin_.assign(n, 0);
    tout_.assign(n, 0);
    subtree_size_.assign(n, 1);
    std::vector<bool> seen(n, false);
    std::uint32_t clock = 0;
    std::vector<std::pair<NodeId, std::size_t>> stack;
    for (NodeId root = 0; root < n; ++root) {
      if (seen[root]) continue;
      seen[root] = true;
      tin_[root] = clock++;
      stack.push_back({root, 0});
      while (!stack.empty()) {
        auto& [v, next] = stack.back();
        const auto nb = f.neighbors(v);
        if (next < nb.size()) {
          const NodeId w = nb[next++];
          if (seen[w]) continue;
          seen[w] = true;
          parent_[w] = v;
          depth_[w] = depth_[v] + 1;
          tin_[w] = clock++;
          stack.push_back({w, 0});
        } else {
          tout_[v] = clock - 1;
          const NodeId done = v;
          stack.pop_back();
          if (!stack.empty()) subtree_size_[stack.back().first] += subtree_size_[done];
        }
      }
    }
    std::size_t levels = 1;
    while ((std::size_t{1} << levels) < n) ++levels;
    up_.assign(levels, std::vector<NodeId>(n, kNoNode));
    for (NodeId v = 0; v < n; ++v) up_[0][v] = parent_[v] == kNoNode ? v : parent_[v];
    for (std::size_t l = 1; l < levels; ++l) {
      for (NodeId v = 0; v < n; ++v) up_[l][v] = up_[l - 1][up_[l - 1][v]];
    }
  }

  NodeId parent(NodeId v) const { return parent_[v]; }
  std::uint32_t depth(NodeId v) const { return depth_[v]; }

  bool is_ancestor(NodeId a, NodeId b) const {
    return tin_[a] <= tin_[b] && tout_[b] <= tout_[a];
  }

  bool connected(NodeId a, NodeId b) const {
    return forest_->component(a) == forest_->component(b);
  }

  /// |F_{v->x}| for x in N(v).
  std::size_t side_size(NodeId v, NodeId x) const {
    if (parent_[x] == v) return subtree_size_[x];
    return forest_->component_size(v) - subtree_size_[v];
  }

  /// |F_{v-/->x}| restricted to v's component.
  std::size_t complement_size(NodeId v, NodeId x) const {
    return forest_->component_size(v) - side_size(v, x);
  }

  /// r_v(w): the neighbor of v on the unique v-w path.
  NodeId route_toward(NodeId v, NodeId w) const {
    if (v == w) throw Error(ErrorCode::kSameNode, std::to_string(v));
    if (!connected(v, w)) {
      throw Error(ErrorCode::kDisconnected, std::to_string(v) + " vs " + std::to_string(w));
    }
    if (!is_ancestor(v, w)) return parent_[v];
    // child of v whose Euler interval contains w
    const auto nb = forest_->neighbors(v);
    for (NodeId c : nb) {
      if (c != parent_[v] && is_ancestor(c, w)) return c;
    }
    return kNoNode;  // unreachable for a valid index
  }

  NodeId lca(NodeId a, NodeId b) const {
    if (depth_[a] < depth_[b]) std::swap(a, b);
    std::uint32_t diff = depth_[a] - depth_[b];
    for (std::size_t l = 0; diff != 0; ++l, diff >>= 1) {
      if (diff & 1U) a = up_[l][a];
    }
    if (a == b) return a;
    for (std::size_t l = up_.size(); l-- > 0;) {
      if (up_[l][a] != up_[l][b]) {
        a = up_[l][a];
        b = up_[l][b];
      }
    }
    return parent_[a];
  }

  std::uint32_t distance(NodeId a, NodeId b) const {
    return depth_[a] + depth_[b] - 2 * depth_[lca(a, b)];
  }

 private:
  const Forest* forest_;
  std::vector<NodeId> parent_;
  std::vector<std::uint32_t> depth_;
  std::vector<std::uint32_t> tin_;
  std::vector<std::uint32_t> tout_;
  std::vector<std::size_t> subtree_size_;
  std::vector<std::vector<NodeId>> up_;
};

/// F_{v->x}: every node whose path from v passes through x (x included).
inline std::vector<NodeId> direction_set(const Forest& f, NodeId v, NodeId x) {
  if (v >= f.node_count() || x >= f.node_count() || !f.has_edge(v, x)) {
    throw Error(ErrorCode::kNotANeighbor, std::to_string(x) + " of " + std::to_string(v));
  }
  std::vector<NodeId> out{x};
  std::vector<NodeId> from{v};
  for (std::size_t head = 0; head < out.size(); ++head) {
    const NodeId cur = out[head];
    for (NodeId w : f.neighbors(cur)) {
      if (w != from[head]) {
        out.push_back(w);
        from.push_back(cur);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline NodeId route_toward(const Forest& f, NodeId v, NodeId w) {
  return TreeIndex(f).route_toward(v, w);
}

/// Flags every node contained in some subtree (connected induced subgraph
/// whose removal leaves at most one piece of its tree) with at most `x` nodes.
inline std::vector<bool> subtree_membership(const Forest& f, std::size_t x) {
  const TreeIndex index(f);
  std::vector<bool> flag(f.node_count(), false);
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (f.component_size(v) <= x) {
      flag[v] = true;
      continue;
    }
    for (NodeId u : f.neighbors(v)) {
      if (index.complement_size(v, u) <= x) {
        flag[v] = true;
        break;
      }
    }
  }
  return flag;
}

struct ImportanceReport {
  std::vector<bool> important;
  std::vector<std::optional<NodeId>> witness;  // empty for isolated nodes
};

/// v is important iff some neighbor u has |F_{v-/->u}| <= threshold. The
/// recorded witness is the neighbor with the smallest complement (ties toward
/// the larger id). Isolated nodes are important without a witness.
inline ImportanceReport compute_importance(const Forest& f, std::size_t threshold) {
  const TreeIndex index(f);
  ImportanceReport report;
  report.important.assign(f.node_count(), false);
  report.witness.assign(f.node_count(), std::nullopt);
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (f.degree(v) == 0) {
      report.important[v] = true;
      continue;
    }
    NodeId best = kNoNode;
    std::size_t best_size = 0;
    for (NodeId u : f.neighbors(v)) {
      const std::size_t s = index.complement_size(v, u);
      if (best == kNoNode || s <= best_size) {
        best = u;
        best_size = s;
      }
    }
    if (best_size <= threshold) {
      report.important[v] = true;
      report.witness[v] = best;
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

enum class GeneratorKind { kPath, kStar, kCaterpillar, kBalancedBinary, kRandomTree, kRandomForest };

inline constexpr std::string_view to_string(GeneratorKind kind) {
  switch (kind) {
    case GeneratorKind::kPath: return "path";
    case GeneratorKind::kStar: return "star";
    case GeneratorKind::kCaterpillar: return "caterpillar";
    case GeneratorKind::kBalancedBinary: return "balanced_binary";
    case GeneratorKind::kRandomTree: return "random_tree";
    case GeneratorKind::kRandomForest: return "random_forest";
  }
  return "unknown";
}

inline std::optional<GeneratorKind> parse_generator_kind(std::string_view s) {
  for (auto k : {GeneratorKind::kPath, GeneratorKind::kStar, GeneratorKind::kCaterpillar,
                 GeneratorKind::kBalancedBinary, GeneratorKind::kRandomTree,
                 GeneratorKind::kRandomForest}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

namespace detail {

// std::uniform_int_distribution is implementation-defined; this keeps
// generated corpora identical across standard libraries.
inline std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

inline std::vector<Edge> prufer_tree(std::size_t n, std::mt19937_64& rng) {
  std::vector<Edge> edges;
  if (n < 2) return edges;
  if (n == 2) return {{0, 1}};
  std::vector<NodeId> code(n - 2);
  for (auto& c : code) c = static_cast<NodeId>(bounded(rng, n));
  std::vector<std::size_t> degree(n, 1);
  for (NodeId c : code) ++degree[c];
  std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> leaves;
  for (NodeId v = 0; v < n; ++v) {
    if (degree[v] == 1) leaves.push(v);
  }
  for (NodeId c : code) {
    const NodeId leaf = leaves.top();
    leaves.pop();
    edges.push_back({std::min(leaf, c), std::max(leaf, c)});
    if (--degree[c] == 1) leaves.push(c);
  }
  const NodeId a = leaves.top();
  leaves.pop();
  const NodeId b = leaves.top();
  edges.push_back({std::min(a, b), std::max(a, b)});
  return edges;
}

}  // namespace detail

/// Deterministic in (kind, n, seed). Path and star ignore the seed.
inline Forest generate(GeneratorKind kind, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  switch (kind) {
    case GeneratorKind::kPath:
      for (NodeId v = 1; v < n; ++v) edges.push_back({v - 1, v});
      break;
    case GeneratorKind::kStar:
      for (NodeId v = 1; v < n; ++v) edges.push_back({0, v});
      break;
    case GeneratorKind::kCaterpillar: {
      // spine 0..s-1, every other node hangs off a seeded spine node
      const std::size_t spine = std::max<std::size_t>(1, (n + 1) / 2);
      for (NodeId v = 1; v < std::min(spine, n); ++v) edges.push_back({v - 1, v});
      for (std::size_t v = spine; v < n; ++v) {
        edges.push_back({static_cast<NodeId>(detail::bounded(rng, spine)), static_cast<NodeId>(v)});
      }
      break;
    }
    case GeneratorKind::kBalancedBinary:
      for (NodeId v = 1; v < n; ++v) edges.push_back({(v - 1) / 2, v});
      break;
    case GeneratorKind::kRandomTree:
      edges = detail::prufer_tree(n, rng);
      break;
    case GeneratorKind::kRandomForest: {
      // Prüfer tree with roughly 1/8 of its edges dropped.
      auto tree = detail::prufer_tree(n, rng);
      for (const Edge& e : tree) {
        if (detail::bounded(rng, 8) != 0) edges.push_back(e);
      }
      break;
    }
  }
  return build_forest(edges, n);
}

}  // namespace treempc
