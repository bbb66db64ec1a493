#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treempc/balexp.hpp"
#include "treempc/config.hpp"
#include "treempc/error.hpp"
#include "treempc/forest.hpp"
#include "treempc/layering.hpp"
#include "treempc/mpcsim.hpp"

namespace treempc {

/// Conservative peeling on F[U] given only the induced forest (local ids)
/// and each member's degree in F. A member has deg_F(v) - deg_{F[U]}(v)
/// neighbors outside U; those never get a layer, so they count as present
/// in every round.
inline std::vector<Layer> conservative_peeling_local(const Forest& induced,
                                                     std::span<const std::size_t> true_degree) {
  const std::size_t m = induced.node_count();
  if (m == 0) throw Error(ErrorCode::kEmptySubset, "U is empty");
  if (true_degree.size() != m) {
    throw Error(ErrorCode::kDomainMismatch, "true degrees for " + std::to_string(true_degree.size()) +
                                                " of " + std::to_string(m) + " nodes");
  }
  std::vector<Layer> layer(m, kInfinity);
  std::vector<std::size_t> outside(m);
  for (NodeId v = 0; v < m; ++v) {
    if (true_degree[v] < induced.degree(v)) {
      throw Error(ErrorCode::kDomainMismatch, "true degree below induced degree");
    }
    outside[v] = true_degree[v] - induced.degree(v);
  }
  const std::size_t rounds = ceil_log2(m + 1);
  std::vector<std::size_t> cnt(m);
  std::vector<bool> pivot(m);
  for (std::size_t i = 1; i <= rounds; ++i) {
    for (NodeId v = 0; v < m; ++v) {
      if (layer[v] != kInfinity) continue;
      cnt[v] = outside[v];
      for (NodeId w : induced.neighbors(v)) cnt[v] += layer[w] == kInfinity;
    }
    for (NodeId v = 0; v < m; ++v) {
      pivot[v] = false;
      if (layer[v] != kInfinity || outside[v] != 0 || cnt[v] > 2) continue;
      pivot[v] = std::all_of(induced.neighbors(v).begin(), induced.neighbors(v).end(),
                             [&](NodeId w) { return layer[w] != kInfinity || cnt[w] <= 2; });
    }
    std::vector<NodeId> peeled;
    for (NodeId v = 0; v < m; ++v) {
      if (layer[v] != kInfinity) continue;
      std::size_t pivot_nbrs = 0;
      for (NodeId w : induced.neighbors(v)) pivot_nbrs += layer[w] == kInfinity && pivot[w];
      if (pivot[v] || cnt[v] - pivot_nbrs <= 1) peeled.push_back(v);
    }
    for (NodeId v : peeled) layer[v] = static_cast<Layer>(i);
  }
  return layer;
}

/// Conservative peeling of U inside F; nodes outside U stay at ∞.
inline Layering conservative_peeling(const Forest& f, std::span<const NodeId> U) {
  std::vector<NodeId> nodes(U.begin(), U.end());
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  for (NodeId v : nodes) {
    if (v >= f.node_count()) throw Error(ErrorCode::kNodeOutOfRange, std::to_string(v));
  }
  const InducedForest sub = induced_subforest(f, nodes);
  std::vector<std::size_t> degrees;
  degrees.reserve(nodes.size());
  for (NodeId v : nodes) degrees.push_back(f.degree(v));
  const auto local = conservative_peeling_local(sub.forest, degrees);
  Layering out(f.node_count());
  for (std::size_t i = 0; i < nodes.size(); ++i) out[nodes[i]] = local[i];
  return out;
}

/// Peels one subset given as F[U] plus true degrees (ids of the host forest).
inline std::vector<Layer> peel_subset(const GoodSubset& s) {
  std::vector<Edge> local;
  local.reserve(s.edges.size());
  auto pos = [&](NodeId w) {
    return static_cast<NodeId>(std::lower_bound(s.nodes.begin(), s.nodes.end(), w) - s.nodes.begin());
  };
  for (const Edge& e : s.edges) local.push_back({pos(e.u), pos(e.v)});
  const Forest induced = build_forest(local, s.nodes.size());
  return conservative_peeling_local(induced, s.true_degree);
}

/// Peels every subset independently and keeps each node's smallest layer.
/// With a ledger the minimum is taken through a sort of (node, layer)
/// records, as a simulated machine would; without one by a direct merge.
inline Layering subtree_rc(const Forest& f, std::span<const GoodSubset> subsets,
                           const MpcConfig* cfg = nullptr, SpaceLedger* ledger = nullptr) {
  Layering out(f.node_count());
  std::vector<std::pair<NodeId, Layer>> records;
  for (const GoodSubset& s : subsets) {
    const auto local = peel_subset(s);
    for (std::size_t i = 0; i < s.nodes.size(); ++i) {
      if (local[i] == kInfinity) continue;
      if (ledger) {
        records.push_back({s.nodes[i], local[i]});
      } else {
        out[s.nodes[i]] = std::min(out[s.nodes[i]], local[i]);
      }
    }
  }
  if (ledger && cfg) {
    std::vector<SortItem> items;
    items.reserve(records.size());
    for (const auto& [v, l] : records) items.push_back({v, l, 2});
    const SortResult sorted = mpc_sort(items, *cfg, *ledger, "subtree_rc/min");
    // the first record of each group carries the minimum
    for (std::size_t pos = 0; pos < sorted.permutation.size(); ++pos) {
      const auto& [v, l] = records[sorted.permutation[pos]];
      if (out[v] == kInfinity) out[v] = l;
    }
  }
  return out;
}

/// Assigns `value` to the pivots of F[alive] (degree <= 2 with every alive
/// neighbor of degree <= 2), then to every alive node of degree <= 1 once the
/// pivots are gone. Returns the layered nodes.
inline std::vector<NodeId> layer_pivots_and_leaves(const Forest& f, std::vector<bool>& alive,
                                                   Layering& layering, Layer value) {
  const std::size_t n = f.node_count();
  std::vector<std::size_t> deg(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (!alive[v]) continue;
    for (NodeId w : f.neighbors(v)) deg[v] += alive[w];
  }
  std::vector<NodeId> pivots;
  for (NodeId v = 0; v < n; ++v) {
    if (!alive[v] || deg[v] > 2) continue;
    bool ok = true;
    for (NodeId w : f.neighbors(v)) ok = ok && (!alive[w] || deg[w] <= 2);
    if (ok) pivots.push_back(v);
  }
  for (NodeId v : pivots) {
    alive[v] = false;
    layering[v] = value;
  }
  std::vector<NodeId> leaves;
  for (NodeId v = 0; v < n; ++v) {
    if (!alive[v]) continue;
    std::size_t d = 0;
    for (NodeId w : f.neighbors(v)) d += alive[w];
    if (d <= 1) leaves.push_back(v);
  }
  for (NodeId v : leaves) {
    alive[v] = false;
    layering[v] = value;
  }
  pivots.insert(pivots.end(), leaves.begin(), leaves.end());
  std::sort(pivots.begin(), pivots.end());
  return pivots;
}

struct HDecompIteration {
  std::vector<NodeId> before;          // V_∞ at the start
  std::vector<NodeId> by_subtree;      // finite after SubTreeRC
  std::vector<NodeId> by_peel;         // pivots and degree <= 1
  std::size_t subsets = 0;
};

struct HDecompResult {
  Layering layering;
  SpaceLedger ledger;
  std::size_t offset = 0;
  std::vector<HDecompIteration> iterations;
};

/// Strict H-decomposition driver. Thresholds come from cfg (built for the
/// global n), layers from the size of `f`. In simulated-MPC mode the full
/// iteration schedule is charged even after every node has a layer.
inline HDecompResult strict_h_decomp(const Forest& f, const MpcConfig& cfg,
                                     bool simulate_mpc = false) {
  const std::size_t n = f.node_count();
  HDecompResult res;
  res.layering = Layering(n);
  res.ledger = SpaceLedger(cfg.local_capacity);
  res.offset = MpcConfig::offset_for(n);
  const std::size_t rounds = cfg.hdecomp_iterations();
  std::vector<bool> alive(n, true);
  for (std::size_t i = 1; i <= rounds; ++i) {
    HDecompIteration it;
    it.before = res.layering.infinite_nodes();
    if (it.before.empty() && !simulate_mpc) break;
    const InducedForest sub = induced_subforest(f, it.before);
    if (simulate_mpc) {
      std::vector<SortItem> items;
      // one record per node and one per incident edge
      for (NodeId v : it.before) {
        items.push_back({v, 0, 1});
        for (NodeId w : f.neighbors(v)) items.push_back({v, std::uint64_t{w} + 1, 1});
      }
      mpc_sort(items, cfg, res.ledger, "hdecomp/induce");
    }
    GoodSubsetCollection coll = good_subset_collection(sub.forest, cfg, simulate_mpc);
    if (simulate_mpc) res.ledger.absorb(coll.ledger);
    it.subsets = coll.subsets.size();
    const Layering local = simulate_mpc
                               ? subtree_rc(sub.forest, coll.subsets, &cfg, &res.ledger)
                               : subtree_rc(sub.forest, coll.subsets);
    for (NodeId v = 0; v < local.size(); ++v) {
      if (!local.finite(v)) continue;
      const NodeId g = sub.to_parent[v];
      res.layering[g] = static_cast<Layer>(i * res.offset + local[v]);
      alive[g] = false;
      it.by_subtree.push_back(g);
    }
    std::sort(it.by_subtree.begin(), it.by_subtree.end());
    if (simulate_mpc) {
      std::vector<SortItem> items;
      for (NodeId v = 0; v < n; ++v) {
        if (alive[v]) items.push_back({v, 0, 2});
      }
      mpc_sort(items, cfg, res.ledger, "hdecomp/pivots");
      mpc_sort(items, cfg, res.ledger, "hdecomp/leaves");
    }
    it.by_peel = layer_pivots_and_leaves(f, alive, res.layering,
                                         static_cast<Layer>((i + 1) * res.offset));
    res.iterations.push_back(std::move(it));
  }
  if (const std::size_t left = res.layering.infinite_count(); left > 0) {
    throw Error(ErrorCode::kIncompleteDecomposition,
                std::to_string(left) + " nodes still at infinity after " + std::to_string(rounds) +
                    " iterations");
  }
  return res;
}

/// Exact generalized rake-and-compress step: removes every node lying in a
/// subtree of at most x nodes, then every node of a maximal degree-2 path
/// with at least ell nodes, then every node of degree <= 1. Returns the
/// survivor flags.
inline std::vector<bool> generalized_rake_compress_step(const Forest& f, std::size_t x,
                                                        std::size_t ell) {
  const std::size_t n = f.node_count();
  std::vector<bool> alive(n, true);
  const auto small = subtree_membership(f, x);
  for (NodeId v = 0; v < n; ++v) alive[v] = !small[v];
  auto alive_degree = [&](NodeId v) {
    std::size_t d = 0;
    for (NodeId w : f.neighbors(v)) d += alive[w];
    return d;
  };
  std::vector<std::size_t> deg(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (alive[v]) deg[v] = alive_degree(v);
  }
  std::vector<bool> seen(n, false);
  std::vector<NodeId> drop;
  for (NodeId v = 0; v < n; ++v) {
    if (!alive[v] || deg[v] != 2 || seen[v]) continue;
    std::vector<NodeId> path{v};
    seen[v] = true;
    for (std::size_t h = 0; h < path.size(); ++h) {
      for (NodeId w : f.neighbors(path[h])) {
        if (alive[w] && deg[w] == 2 && !seen[w]) {
          seen[w] = true;
          path.push_back(w);
        }
      }
    }
    if (path.size() >= ell) drop.insert(drop.end(), path.begin(), path.end());
  }
  for (NodeId v : drop) alive[v] = false;
  std::vector<NodeId> leaves;
  for (NodeId v = 0; v < n; ++v) {
    if (alive[v] && alive_degree(v) <= 1) leaves.push_back(v);
  }
  for (NodeId v : leaves) alive[v] = false;
  return alive;
}

struct PreprocessResult {
  Layering layering;         // layers 1..iterations, ∞ on the residual
  InducedForest residual;
  std::size_t iterations = 0;
};

inline std::size_t default_preprocess_iterations(std::size_t n) {
  return 4 * ceil_log2(ceil_log2(std::max<std::size_t>(n, 4)));
}

/// Runs the pivot and degree-<=1 steps `iterations` times, layer i in
/// iteration i, and hands back what is left.
inline PreprocessResult optimal_space_preprocess(const Forest& f, std::size_t iterations,
                                                 const MpcConfig* cfg = nullptr,
                                                 SpaceLedger* ledger = nullptr) {
  const std::size_t n = f.node_count();
  PreprocessResult res;
  res.layering = Layering(n);
  res.iterations = iterations;
  std::vector<bool> alive(n, true);
  for (std::size_t i = 1; i <= iterations; ++i) {
    if (ledger && cfg) {
      std::vector<SortItem> items;
      for (NodeId v = 0; v < n; ++v) {
        if (alive[v]) items.push_back({v, 0, 2});
      }
      mpc_sort(items, *cfg, *ledger, "preprocess/pivots");
      mpc_sort(items, *cfg, *ledger, "preprocess/leaves");
    }
    layer_pivots_and_leaves(f, alive, res.layering, static_cast<Layer>(i));
  }
  res.residual = induced_subforest(f, res.layering.infinite_nodes());
  return res;
}

}  // namespace treempc
