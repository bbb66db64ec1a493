#pragma once

// Brute-force references for the tests. Written from the definitions and
// kept apart from the algorithm headers: only Forest and Layering are shared.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "treempc/error.hpp"
#include "treempc/forest.hpp"
#include "treempc/layering.hpp"

namespace treempc::oracle {

inline constexpr std::size_t kEnumerateLimit = 12;

inline void require_small(std::size_t n, std::size_t limit = kEnumerateLimit) {
  if (n > limit) {
    throw Error(ErrorCode::kSizeLimit,
                std::to_string(n) + " nodes exceeds the enumeration limit " + std::to_string(limit));
  }
}

/// BFS distances from v; -1 for unreachable.
inline std::vector<long> distances(const Forest& f, NodeId v) {
  std::vector<long> d(f.node_count(), -1);
  std::vector<NodeId> q{v};
  d[v] = 0;
  for (std::size_t h = 0; h < q.size(); ++h) {
    for (NodeId w : f.neighbors(q[h])) {
      if (d[w] < 0) {
        d[w] = d[q[h]] + 1;
        q.push_back(w);
      }
    }
  }
  return d;
}

/// Nodes reachable from `start` without entering any node with blocked[x].
inline std::vector<NodeId> reach(const Forest& f, NodeId start, const std::vector<bool>& blocked) {
  std::vector<bool> seen(blocked);
  std::vector<NodeId> out{start};
  seen[start] = true;
  for (std::size_t h = 0; h < out.size(); ++h) {
    for (NodeId w : f.neighbors(out[h])) {
      if (!seen[w]) {
        seen[w] = true;
        out.push_back(w);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Classic peel: repeatedly remove every node with at most two remaining
/// neighbors; layer = round of removal.
inline Layering peel_oracle(const Forest& f) {
  const std::size_t n = f.node_count();
  Layering l(n);
  std::size_t left = n;
  for (Layer round = 1; left > 0; ++round) {
    std::vector<NodeId> now;
    for (NodeId v = 0; v < n; ++v) {
      if (l.finite(v)) continue;
      std::size_t d = 0;
      for (NodeId w : f.neighbors(v)) d += !l.finite(w);
      if (d <= 2) now.push_back(v);
    }
    for (NodeId v : now) l[v] = round;
    left -= now.size();
  }
  return l;
}

/// 2-coloring (colors 1 and 2) by BFS from the smallest node of each tree.
inline std::vector<std::uint32_t> greedy_tree_color(const Forest& f) {
  std::vector<std::uint32_t> c(f.node_count(), 0);
  for (NodeId s = 0; s < f.node_count(); ++s) {
    if (c[s] != 0) continue;
    c[s] = 1;
    std::vector<NodeId> q{s};
    for (std::size_t h = 0; h < q.size(); ++h) {
      for (NodeId w : f.neighbors(q[h])) {
        if (c[w] == 0) {
          c[w] = 3 - c[q[h]];
          q.push_back(w);
        }
      }
    }
  }
  return c;
}

/// The peeling algorithm exactly as stated, with the whole forest in view:
/// V_{>=i} covers all of V(F), and only members of U are ever layered.
inline Layering conservative_peeling_oracle(const Forest& f, const std::vector<bool>& in_u) {
  const std::size_t n = f.node_count();
  Layering l(n);
  std::size_t u_size = 0;
  for (NodeId v = 0; v < n; ++v) u_size += in_u[v];
  std::size_t L = 0;
  while ((std::size_t{1} << L) < u_size + 1) ++L;
  std::vector<bool> alive(n, true);
  auto nbrs = [&](NodeId v) {
    std::vector<NodeId> out;
    for (NodeId w : f.neighbors(v)) {
      if (alive[w]) out.push_back(w);
    }
    return out;
  };
  for (std::size_t i = 1; i <= L; ++i) {
    std::vector<bool> pivot(n, false);
    for (NodeId v = 0; v < n; ++v) {
      if (!alive[v] || !in_u[v]) continue;
      const auto nv = nbrs(v);
      bool ok = nv.size() <= 2;
      for (NodeId w : nv) ok = ok && in_u[w] && nbrs(w).size() <= 2;
      pivot[v] = ok;
    }
    std::vector<NodeId> layer_i;
    for (NodeId v = 0; v < n; ++v) {
      if (!alive[v] || !in_u[v]) continue;
      std::size_t rest = 0;
      for (NodeId w : nbrs(v)) rest += !pivot[w];
      if (pivot[v] || rest <= 1) layer_i.push_back(v);
    }
    for (NodeId v : layer_i) {
      alive[v] = false;
      l[v] = static_cast<Layer>(i);
    }
  }
  return l;
}

inline std::vector<bool> as_mask(std::size_t n, std::span<const NodeId> nodes) {
  std::vector<bool> m(n, false);
  for (NodeId v : nodes) m[v] = true;
  return m;
}

/// U is good for v: v in U, at most one neighbor of v outside U, and every
/// other member within distance 3L of v has all its neighbors in U.
inline bool is_good_subset(const Forest& f, const std::vector<bool>& in_u, NodeId v) {
  if (!in_u[v]) return false;
  std::size_t size = 0;
  for (bool b : in_u) size += b;
  std::size_t L = 0;
  while ((std::size_t{1} << L) < size + 1) ++L;
  std::size_t missing = 0;
  for (NodeId w : f.neighbors(v)) missing += !in_u[w];
  if (missing > 1) return false;
  const auto d = distances(f, v);
  for (NodeId w = 0; w < f.node_count(); ++w) {
    if (w == v || !in_u[w] || d[w] < 0 || d[w] > static_cast<long>(3 * L)) continue;
    for (NodeId x : f.neighbors(w)) {
      if (!in_u[x]) return false;
    }
  }
  return true;
}

/// Nodes at distance 1..k from v whose shortest path leaves v through x.
inline std::vector<NodeId> direction_ball(const Forest& f, NodeId v, NodeId x, std::size_t k) {
  std::vector<bool> blocked(f.node_count(), false);
  blocked[v] = true;
  const auto side = reach(f, x, blocked);
  const auto d = distances(f, v);
  std::vector<NodeId> out;
  for (NodeId w : side) {
    if (d[w] >= 1 && d[w] <= static_cast<long>(k)) out.push_back(w);
  }
  return out;
}

/// Connected induced subgraph T' whose removal leaves no more components
/// than F has.
inline bool is_subtree(const Forest& f, const std::vector<bool>& in_t) {
  const std::size_t n = f.node_count();
  auto count_components = [&](const std::vector<bool>& keep) {
    std::vector<bool> blocked(n);
    for (NodeId v = 0; v < n; ++v) blocked[v] = !keep[v];
    std::size_t comps = 0;
    for (NodeId v = 0; v < n; ++v) {
      if (!blocked[v]) {
        ++comps;
        for (NodeId w : reach(f, v, blocked)) blocked[w] = true;
      }
    }
    return comps;
  };
  std::vector<bool> all(n, true);
  std::vector<bool> rest(n);
  for (NodeId v = 0; v < n; ++v) rest[v] = !in_t[v];
  return count_components(in_t) == 1 && count_components(rest) <= count_components(all);
}

/// For each node, whether some subtree of at most x nodes contains it. A
/// subtree through v is v's component minus at most one whole branch at v,
/// so the smallest one drops the largest branch.
inline std::vector<bool> in_small_subtree(const Forest& f, std::size_t x) {
  const std::size_t n = f.node_count();
  std::vector<bool> out(n, false);
  for (NodeId v = 0; v < n; ++v) {
    std::vector<bool> none(n, false);
    const std::size_t comp = reach(f, v, none).size();
    std::size_t largest = 0;
    for (NodeId u : f.neighbors(v)) {
      std::vector<bool> blocked(n, false);
      blocked[v] = true;
      largest = std::max(largest, reach(f, u, blocked).size());
    }
    out[v] = comp - largest <= x;
  }
  return out;
}

/// All node subsets of a small forest, as sorted node lists.
inline std::vector<std::vector<NodeId>> enumerate_subsets(std::size_t n) {
  require_small(n);
  std::vector<std::vector<NodeId>> out;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    std::vector<NodeId> s;
    for (NodeId v = 0; v < n; ++v) {
      if (mask >> v & 1u) s.push_back(v);
    }
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::vector<NodeId>> enumerate_connected(const Forest& f) {
  std::vector<std::vector<NodeId>> out;
  for (auto& s : enumerate_subsets(f.node_count())) {
    if (s.empty()) continue;
    std::vector<bool> blocked(f.node_count(), true);
    for (NodeId v : s) blocked[v] = false;
    if (reach(f, s.front(), blocked).size() == s.size()) out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<std::vector<NodeId>> enumerate_subtrees(const Forest& f, std::size_t max_size) {
  std::vector<std::vector<NodeId>> out;
  for (auto& s : enumerate_connected(f)) {
    if (s.size() <= max_size && is_subtree(f, as_mask(f.node_count(), s))) out.push_back(std::move(s));
  }
  return out;
}

/// Every map V -> {1, 2, ∞}.
inline std::vector<Layering> enumerate_layerings(std::size_t n) {
  require_small(n);
  static constexpr Layer kValues[] = {1, 2, kInfinity};
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) total *= 3;
  std::vector<Layering> out;
  out.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    Layering l(n);
    std::size_t c = code;
    for (NodeId v = 0; v < n; ++v) {
      l[v] = kValues[c % 3];
      c /= 3;
    }
    out.push_back(std::move(l));
  }
  return out;
}

namespace detail {

inline std::string canonical(const Forest& f, NodeId v, NodeId parent) {
  std::vector<std::string> kids;
  for (NodeId w : f.neighbors(v)) {
    if (w != parent) kids.push_back(canonical(f, w, v));
  }
  std::sort(kids.begin(), kids.end());
  std::string s = "(";
  for (const auto& k : kids) s += k;
  return s + ")";
}

inline std::string tree_signature(const Forest& f) {
  std::string best;
  for (NodeId r = 0; r < f.node_count(); ++r) {
    std::string s = canonical(f, r, kNoNode);
    if (best.empty() || s < best) best = s;
  }
  return best;
}

}  // namespace detail

/// One representative of every unlabeled tree on n nodes. Every tree on n
/// nodes is a tree on n-1 nodes plus a leaf, so grow by one leaf at a time
/// and keep the first tree seen for each canonical form.
inline std::vector<Forest> all_trees(std::size_t n) {
  require_small(n);
  if (n == 0) return {};
  std::vector<Forest> level{build_forest(std::vector<Edge>{}, 1)};
  for (std::size_t m = 2; m <= n; ++m) {
    std::vector<Forest> next;
    std::set<std::string> seen;
    for (const Forest& t : level) {
      for (NodeId v = 0; v < t.node_count(); ++v) {
        std::vector<Edge> e = t.edges();
        e.push_back({v, static_cast<NodeId>(m - 1)});
        Forest g = build_forest(e, m);
        if (seen.insert(detail::tree_signature(g)).second) next.push_back(std::move(g));
      }
    }
    level = std::move(next);
  }
  return level;
}

}  // namespace treempc::oracle
