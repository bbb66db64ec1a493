#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "treempc/config.hpp"
#include "treempc/error.hpp"
#include "treempc/forest.hpp"
#include "treempc/mpcsim.hpp"

namespace treempc {

/// t_v(w) = (v, r_v(w), w, r_w(v), d(v,w)). The self tuple is (v, v, v, v, 0).
struct KnowledgeTuple {
  NodeId origin = 0;
  NodeId first_hop = 0;
  NodeId target = 0;
  NodeId last_hop = 0;
  std::uint32_t dist = 0;
  friend bool operator==(const KnowledgeTuple&, const KnowledgeTuple&) = default;
};

inline constexpr std::size_t kTupleWords = 5;

enum class NodeState { kActive, kFull, kKnowledgeable };
enum class DirectionState { kActive, kBlocked, kKnowledgeable };

inline constexpr std::string_view to_string(NodeState s) {
  switch (s) {
    case NodeState::kActive: return "active";
    case NodeState::kFull: return "full";
    case NodeState::kKnowledgeable: return "knowledgeable";
  }
  return "unknown";
}

inline constexpr std::string_view to_string(DirectionState s) {
  switch (s) {
    case DirectionState::kActive: return "active";
    case DirectionState::kBlocked: return "blocked";
    case DirectionState::kKnowledgeable: return "knowledgeable";
  }
  return "unknown";
}

/// S_v together with the per-direction bookkeeping of the exponentiation.
/// Directions are indexed by position in the (sorted) adjacency list of the
/// owner; tuples are kept sorted by target.
struct KnowledgeSet {
  NodeId owner = 0;
  std::vector<KnowledgeTuple> tuples;
  std::vector<NodeId> directions;
  std::vector<std::uint32_t> direction_size;
  std::vector<bool> blocked;   // B_v
  std::vector<bool> complete;  // C_v
  std::vector<std::uint32_t> exp_count;
  bool full = false;
  bool knowledgeable = false;

  static KnowledgeSet initial(const Forest& f, NodeId v) {
    KnowledgeSet s;
    s.owner = v;
    const auto nb = f.neighbors(v);
    s.directions.assign(nb.begin(), nb.end());
    const std::size_t d = nb.size();
    s.direction_size.assign(d, 1);
    s.blocked.assign(d, false);
    s.complete.assign(d, false);
    s.exp_count.assign(d, 0);
    s.tuples.reserve(d + 1);
    for (NodeId x : nb) s.tuples.push_back({v, x, x, v, 1});
    s.tuples.push_back({v, v, v, v, 0});
    std::sort(s.tuples.begin(), s.tuples.end(),
              [](const KnowledgeTuple& a, const KnowledgeTuple& b) { return a.target < b.target; });
    return s;
  }

  std::size_t size() const { return tuples.size(); }
  std::size_t degree() const { return directions.size(); }
  std::size_t words() const { return kTupleWords * tuples.size() + 1 + directions.size(); }

  const KnowledgeTuple* find(NodeId target) const {
    auto it = std::lower_bound(tuples.begin(), tuples.end(), target,
                               [](const KnowledgeTuple& t, NodeId w) { return t.target < w; });
    return it != tuples.end() && it->target == target ? &*it : nullptr;
  }
  bool contains(NodeId target) const { return find(target) != nullptr; }

  /// Index of neighbor x, or degree() if x is not a neighbor.
  std::size_t direction_index(NodeId x) const {
    auto it = std::lower_bound(directions.begin(), directions.end(), x);
    return it != directions.end() && *it == x ? static_cast<std::size_t>(it - directions.begin())
                                              : directions.size();
  }

  /// S_{v->x} as target ids, sorted.
  std::vector<NodeId> direction_targets(std::size_t i) const {
    std::vector<NodeId> out;
    for (const auto& t : tuples) {
      if (t.target != owner && t.first_hop == directions[i]) out.push_back(t.target);
    }
    return out;
  }

  std::size_t complete_count() const {
    return static_cast<std::size_t>(std::count(complete.begin(), complete.end(), true));
  }

  NodeState state() const {
    if (knowledgeable) return NodeState::kKnowledgeable;
    if (full) return NodeState::kFull;
    return NodeState::kActive;
  }
  bool active() const { return !full && !knowledgeable; }

  DirectionState direction_state(std::size_t i) const {
    if (complete[i]) return DirectionState::kKnowledgeable;
    if (blocked[i]) return DirectionState::kBlocked;
    return DirectionState::kActive;
  }

  /// Adds tuples for targets not yet present. `extra` must be sorted by
  /// target and carry this owner as origin.
  void merge(const std::vector<KnowledgeTuple>& extra) {
    if (extra.empty()) return;
    std::vector<KnowledgeTuple> out;
    out.reserve(tuples.size() + extra.size());
    auto a = tuples.begin();
    auto b = extra.begin();
    while (a != tuples.end() || b != extra.end()) {
      if (b == extra.end() || (a != tuples.end() && a->target < b->target)) {
        out.push_back(*a++);
      } else if (a == tuples.end() || b->target < a->target) {
        ++direction_size[direction_index(b->first_hop)];
        out.push_back(*b++);
      } else {
        out.push_back(*a++);
        ++b;
      }
    }
    tuples = std::move(out);
  }
};

namespace detail {

/// Sorted distance lists of every S_w, overall and per direction, so that
/// |S_{w-/->y} ∩ N^r(w)| is two binary searches.
class DistanceIndex {
 public:
  explicit DistanceIndex(std::span<const KnowledgeSet> sets) : all_(sets.size()), per_(sets.size()) {
    for (std::size_t w = 0; w < sets.size(); ++w) {
      const auto& s = sets[w];
      per_[w].assign(s.degree(), {});
      all_[w].reserve(s.size());
      for (const auto& t : s.tuples) {
        all_[w].push_back(t.dist);
        if (t.target != s.owner) per_[w][s.direction_index(t.first_hop)].push_back(t.dist);
      }
      std::sort(all_[w].begin(), all_[w].end());
      for (auto& d : per_[w]) std::sort(d.begin(), d.end());
    }
  }

  /// Tuples of S_w with distance <= r whose first hop is not direction `skip`.
  std::size_t count(NodeId w, std::size_t skip, std::uint32_t r) const {
    auto le = [r](const std::vector<std::uint32_t>& v) {
      return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), r) - v.begin());
    };
    std::size_t total = le(all_[w]);
    if (skip < per_[w].size()) total -= le(per_[w][skip]);
    return total;
  }

 private:
  std::vector<std::vector<std::uint32_t>> all_;
  std::vector<std::vector<std::vector<std::uint32_t>>> per_;
};

inline bool by_target(const KnowledgeTuple& a, const KnowledgeTuple& b) { return a.target < b.target; }

}  // namespace detail

/// Exp(x, k) for the single direction with index `dir` of node v:
/// the union over w in S_{v->x} of S_{w-/->r_w(v)} ∩ N^{k-d(v,w)}(w), as
/// composed tuples t_v(z), sorted by target.
inline std::vector<KnowledgeTuple> exp_direction(std::span<const KnowledgeSet> sets, NodeId v,
                                                 std::size_t dir, std::size_t k) {
  const KnowledgeSet& sv = sets[v];
  const NodeId x = sv.directions[dir];
  std::vector<KnowledgeTuple> out;
  for (const auto& tw : sv.tuples) {
    if (tw.target == v || tw.first_hop != x) continue;
    const NodeId w = tw.target;
    if (tw.dist > k) continue;
    const std::uint32_t radius = static_cast<std::uint32_t>(k) - tw.dist;
    const NodeId back = tw.last_hop;  // r_w(v)
    for (const auto& tz : sets[w].tuples) {
      if (tz.dist > radius) continue;
      if (tz.target == w) {
        out.push_back(tw);
        continue;
      }
      if (tz.first_hop == back) continue;
      out.push_back({v, x, tz.target, tz.last_hop, tw.dist + tz.dist});
    }
  }
  std::sort(out.begin(), out.end(), detail::by_target);
  out.erase(std::unique(out.begin(), out.end(),
                        [](const KnowledgeTuple& a, const KnowledgeTuple& b) {
                          return a.target == b.target;
                        }),
            out.end());
  return out;
}

/// Exp(X, k) for a set of neighbor ids X.
inline std::vector<KnowledgeTuple> exp(const Forest& f, std::span<const KnowledgeSet> sets, NodeId v,
                                       std::span<const NodeId> X, std::size_t k) {
  std::vector<KnowledgeTuple> out;
  for (NodeId x : X) {
    if (!f.has_edge(v, x)) {
      throw Error(ErrorCode::kNotANeighbor, std::to_string(x) + " of " + std::to_string(v));
    }
    auto part = exp_direction(sets, v, sets[v].direction_index(x), k);
    out.insert(out.end(), part.begin(), part.end());
  }
  // different directions never share a target
  std::sort(out.begin(), out.end(), detail::by_target);
  return out;
}

enum class ProbeKind { kComputed, kShortcut, kSkipped };

struct ProbeResult {
  std::vector<std::size_t> u;        // U_{v->x} per direction index
  std::vector<ProbeKind> kind;
  std::vector<NodeId> blocked_dirs;  // sorted neighbor ids
  std::vector<NodeId> allowed;       // X, sorted
  std::optional<NodeId> excluded;    // argmax direction when nothing is blocked
};

/// Direction probing for node v. Directions already in B_v are not queried
/// (their U is reported as 0 with kind kSkipped). A direction holding a
/// known node of degree above cap3 takes U = cap3 without querying.
inline ProbeResult probe_directions(const Forest& f, std::span<const KnowledgeSet> sets,
                                    const detail::DistanceIndex& index, NodeId v,
                                    const MpcConfig& cfg) {
  const KnowledgeSet& sv = sets[v];
  const std::size_t d = sv.degree();
  const std::size_t k = cfg.k_param;
  ProbeResult r;
  r.u.assign(d, 0);
  r.kind.assign(d, ProbeKind::kComputed);
  for (std::size_t i = 0; i < d; ++i) {
    if (sv.blocked[i]) r.kind[i] = ProbeKind::kSkipped;
  }
  for (const auto& t : sv.tuples) {
    if (t.target == v) continue;
    const std::size_t i = sv.direction_index(t.first_hop);
    if (r.kind[i] != ProbeKind::kComputed) continue;
    if (f.degree(t.target) > cfg.cap3) {
      r.kind[i] = ProbeKind::kShortcut;
      r.u[i] = cfg.cap3;
      continue;
    }
    if (t.dist > k) continue;
    const std::size_t back = sets[t.target].direction_index(t.last_hop);
    r.u[i] += index.count(t.target, back, static_cast<std::uint32_t>(k - t.dist));
  }
  const std::size_t limit = k * cfg.epsilon_capacity;
  std::vector<bool> blocked(d, false);
  for (std::size_t i = 0; i < d; ++i) {
    blocked[i] = sv.blocked[i] || r.u[i] > limit;
    if (blocked[i]) r.blocked_dirs.push_back(sv.directions[i]);
  }
  std::size_t skip = d;
  if (r.blocked_dirs.empty() && d > 0) {
    skip = 0;
    for (std::size_t i = 1; i < d; ++i) {
      if (r.u[i] >= r.u[skip]) skip = i;  // ties toward the larger id
    }
    r.excluded = sv.directions[skip];
  }
  for (std::size_t i = 0; i < d; ++i) {
    if (!blocked[i] && i != skip) r.allowed.push_back(sv.directions[i]);
  }
  return r;
}

/// Degree-matching test: direction x (index `dir`) is complete iff every
/// known node of S_{v->x} within distance k-1 has the same degree in G[S_v]
/// as in F. G[S_v] is rebuilt from the tuples: a non-owner a is adjacent to
/// r_a(v), its last hop.
inline std::vector<bool> degree_matching_completeness(const Forest& f, const KnowledgeSet& s,
                                                      std::size_t k) {
  const std::size_t m = s.size();
  std::vector<std::uint32_t> induced(m, 0);
  auto pos = [&](NodeId w) {
    auto it = std::lower_bound(s.tuples.begin(), s.tuples.end(), w,
                               [](const KnowledgeTuple& t, NodeId id) { return t.target < id; });
    return it != s.tuples.end() && it->target == w ? static_cast<std::size_t>(it - s.tuples.begin())
                                                   : m;
  };
  for (std::size_t i = 0; i < m; ++i) {
    const auto& t = s.tuples[i];
    if (t.target == s.owner) continue;
    const std::size_t p = pos(t.last_hop);
    if (p == m) continue;
    ++induced[i];
    ++induced[p];
  }
  std::vector<bool> ok(s.degree(), true);
  for (std::size_t i = 0; i < m; ++i) {
    const auto& t = s.tuples[i];
    if (t.target == s.owner || t.dist + 1 > k) continue;
    if (induced[i] != f.degree(t.target)) ok[s.direction_index(t.first_hop)] = false;
  }
  return ok;
}

inline bool degree_matching_completeness(const Forest& f, const KnowledgeSet& s, NodeId x,
                                         std::size_t k) {
  const std::size_t i = s.direction_index(x);
  if (i == s.degree()) {
    throw Error(ErrorCode::kNotANeighbor, std::to_string(x) + " of " + std::to_string(s.owner));
  }
  return degree_matching_completeness(f, s, k)[i];
}

struct ProbeSample {
  std::size_t iteration = 0;
  NodeId node = 0;
  NodeId direction = 0;
  std::size_t u = 0;
  std::size_t exp_size = 0;
  bool allowed = false;
};

struct BalexpHooks {
  std::function<void(std::size_t, std::span<const KnowledgeSet>)> on_iteration;
  std::function<void(const ProbeSample&)> on_probe;  // computed directions only
  std::function<void(NodeId, NodeId, std::size_t)> on_manual_block;
};

struct BalexpOptions {
  bool simulate_mpc = false;
  BalexpHooks hooks;
};

struct BalexpResult {
  std::vector<KnowledgeSet> sets;
  SpaceLedger ledger;
  std::size_t iterations = 0;
  std::vector<std::size_t> knowledgeable_at;  // 0 = at initialization, npos = never
  std::size_t peak_total_tuples = 0;
};

namespace detail {

/// Packs knowledge sets onto machines. `incoming` reserves room for replies
/// a node is about to receive, so machines are balanced for the exchange.
inline MachineAssignment place_sets(const Forest& f, std::span<const KnowledgeSet> sets,
                                    const MpcConfig& cfg, std::span<const Query> incoming = {}) {
  std::vector<std::size_t> words(sets.size());
  std::vector<bool> split(sets.size());
  for (const Query& q : incoming) words[q.asker] += q.reply_words;
  for (std::size_t v = 0; v < sets.size(); ++v) {
    words[v] += sets[v].words();
    split[v] = f.degree(static_cast<NodeId>(v)) > cfg.cap3;
  }
  return pack_nodes(words, split, cfg.local_capacity);
}

inline void refresh_completeness(const Forest& f, KnowledgeSet& s, std::size_t k) {
  const auto ok = degree_matching_completeness(f, s, k);
  for (std::size_t i = 0; i < ok.size(); ++i) {
    if (ok[i]) s.complete[i] = true;
  }
  if (s.complete_count() + 1 >= s.degree()) s.knowledgeable = true;
}

}  // namespace detail

/// Balanced exponentiation with direction probing, run for
/// cfg.balexp_iterations() iterations. In simulated-MPC mode every
/// iteration charges four primitives (probe queries, exponentiation queries,
/// the symmetry sort, degree queries) and records storage after each.
inline BalexpResult balanced_exponentiation(const Forest& f, const MpcConfig& cfg,
                                            const BalexpOptions& options = {}) {
  const std::size_t n = f.node_count();
  const std::size_t k = cfg.k_param;
  if (k > cfg.epsilon_capacity) {
    throw Error(ErrorCode::kInvalidConfig, "k exceeds epsilon_capacity");
  }
  BalexpResult res;
  res.ledger = SpaceLedger(cfg.local_capacity);
  res.sets.reserve(n);
  for (NodeId v = 0; v < n; ++v) res.sets.push_back(KnowledgeSet::initial(f, v));
  res.knowledgeable_at.assign(n, static_cast<std::size_t>(-1));
  if (k == 0) {
    for (NodeId v = 0; v < n; ++v) {
      res.sets[v].knowledgeable = true;
      res.knowledgeable_at[v] = 0;
    }
    return res;
  }
  for (NodeId v = 0; v < n; ++v) {
    detail::refresh_completeness(f, res.sets[v], k);
    if (res.sets[v].knowledgeable) res.knowledgeable_at[v] = 0;
  }
  auto total_tuples = [&] {
    std::size_t t = 0;
    for (const auto& s : res.sets) t += s.size();
    return t;
  };
  res.peak_total_tuples = total_tuples();

  const std::size_t shrink = cfg.shrink_iterations();
  const std::size_t iterations = cfg.balexp_iterations();
  const bool mpc = options.simulate_mpc;
  const auto& hooks = options.hooks;

  for (std::size_t j = 1; j <= iterations; ++j) {
    auto& sets = res.sets;
    for (auto& s : sets) {
      if (s.size() > cfg.cap3) s.full = true;
    }
    std::vector<NodeId> active;
    for (NodeId v = 0; v < n; ++v) {
      if (sets[v].active()) active.push_back(v);
    }

    const std::span<const KnowledgeSet> snapshot(sets);
    const detail::DistanceIndex index(snapshot);
    std::vector<Query> probe_queries;
    std::vector<Query> exp_queries;

    std::vector<ProbeResult> probes(active.size());
    std::vector<std::vector<KnowledgeTuple>> gained(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      const NodeId v = active[a];
      probes[a] = probe_directions(f, snapshot, index, v, cfg);
      const ProbeResult& pr = probes[a];
      const KnowledgeSet& sv = sets[v];
      if (mpc) {
        for (const auto& t : sv.tuples) {
          if (t.target == v) continue;
          if (pr.kind[sv.direction_index(t.first_hop)] == ProbeKind::kComputed) {
            probe_queries.push_back({t.target, v, 1});
          }
        }
      }
      std::vector<bool> allowed(sv.degree(), false);
      for (NodeId x : pr.allowed) allowed[sv.direction_index(x)] = true;
      for (std::size_t i = 0; i < sv.degree(); ++i) {
        const bool probe_hook = hooks.on_probe && pr.kind[i] == ProbeKind::kComputed;
        if (!allowed[i] && !probe_hook) continue;
        auto part = exp_direction(snapshot, v, i, k);
        if (probe_hook) {
          hooks.on_probe({j, v, sv.directions[i], pr.u[i], part.size(), allowed[i]});
        }
        if (!allowed[i]) continue;
        if (mpc) {
          for (const auto& t : sv.tuples) {
            if (t.target == v || t.first_hop != sv.directions[i]) continue;
            const std::size_t back = snapshot[t.target].direction_index(t.last_hop);
            const std::size_t answer =
                t.dist > k ? 0 : index.count(t.target, back, static_cast<std::uint32_t>(k - t.dist));
            exp_queries.push_back({t.target, v, kTupleWords * answer});
          }
        }
        for (auto& t : part) {
          if (!sv.contains(t.target)) gained[a].push_back(t);
        }
      }
    }
    if (mpc) {
      auto words = [&](NodeId w) { return snapshot[w].words(); };
      auto size = [&](NodeId w) { return snapshot[w].size(); };
      query_exchange(probe_queries, detail::place_sets(f, snapshot, cfg, probe_queries), words, size, f,
                     cfg, res.ledger, "balexp/probe");
      query_exchange(exp_queries, detail::place_sets(f, snapshot, cfg, exp_queries), words, size, f,
                     cfg, res.ledger, "balexp/exp");
    }
    // B_v <- blockedDirs, then S'_v = S_v ∪ Exp(X, k)
    for (std::size_t a = 0; a < active.size(); ++a) {
      KnowledgeSet& sv = sets[active[a]];
      for (NodeId b : probes[a].blocked_dirs) sv.blocked[sv.direction_index(b)] = true;
      // only exponentiations after the first J iterations count toward the
      // manual block; counting from iteration 1 blocks directions that are
      // still small (see the block-soundness test)
      if (j > shrink) {
        for (NodeId x : probes[a].allowed) ++sv.exp_count[sv.direction_index(x)];
      }
      std::sort(gained[a].begin(), gained[a].end(), detail::by_target);
      sv.merge(gained[a]);
    }

    // Symmetry repair: v in S_w but w not in S_v.
    struct Notice {
      NodeId v;
      KnowledgeTuple t;
    };
    std::vector<Notice> notices;
    for (NodeId w = 0; w < n; ++w) {
      for (const auto& t : sets[w].tuples) {
        if (t.target == w || sets[t.target].contains(w)) continue;
        notices.push_back({t.target, {t.target, t.last_hop, w, t.first_hop, t.dist}});
      }
    }
    std::sort(notices.begin(), notices.end(), [](const Notice& a, const Notice& b) {
      if (a.v != b.v) return a.v < b.v;
      if (a.t.first_hop != b.t.first_hop) return a.t.first_hop < b.t.first_hop;
      return a.t.target < b.t.target;
    });
    if (mpc) {
      std::vector<SortItem> items;
      items.reserve(notices.size());
      for (const auto& nt : notices) items.push_back({nt.v, nt.t.target, kTupleWords});
      mpc_sort(items, cfg, res.ledger, "balexp/symmetry");
    }
    for (std::size_t i = 0; i < notices.size();) {
      std::size_t e = i;
      while (e < notices.size() && notices[e].v == notices[i].v &&
             notices[e].t.first_hop == notices[i].t.first_hop) {
        ++e;
      }
      KnowledgeSet& sv = sets[notices[i].v];
      const std::size_t dir = sv.direction_index(notices[i].t.first_hop);
      if (sv.direction_size[dir] + (e - i) <= cfg.epsilon_capacity) {
        std::vector<KnowledgeTuple> add;
        for (std::size_t q = i; q < e; ++q) add.push_back(notices[q].t);
        sv.merge(add);
      } else {
        sv.blocked[dir] = true;
      }
      i = e;
    }

    // C_v, knowledgeable, manual blocks.
    std::vector<Query> degree_queries;
    for (NodeId v : active) {
      KnowledgeSet& sv = sets[v];
      if (mpc) {
        for (const auto& t : sv.tuples) {
          if (t.target != v) degree_queries.push_back({t.target, v, 1});
        }
      }
      detail::refresh_completeness(f, sv, k);
      if (sv.knowledgeable) {
        res.knowledgeable_at[v] = j;
        continue;
      }
      if (j <= shrink) continue;
      for (std::size_t b = 0; b < sv.degree(); ++b) {
        if (sv.exp_count[b] >= 3 && !sv.complete[b] && !sv.blocked[b]) {
          sv.blocked[b] = true;
          if (hooks.on_manual_block) hooks.on_manual_block(v, sv.directions[b], j);
        }
      }
    }
    if (mpc) {
      auto words = [&](NodeId w) { return sets[w].words(); };
      auto size = [&](NodeId w) { return sets[w].size(); };
      query_exchange(degree_queries, detail::place_sets(f, sets, cfg, degree_queries), words, size, f, cfg,
                     res.ledger, "balexp/degree", false);
      const MachineAssignment after = detail::place_sets(f, sets, cfg);
      res.ledger.record_loads(after.load, "balexp/state");
    }
    res.peak_total_tuples = std::max(res.peak_total_tuples, total_tuples());
    res.iterations = j;
    if (hooks.on_iteration) hooks.on_iteration(j, std::span<const KnowledgeSet>(sets));
    if (mpc && res.ledger.rounds() > cfg.round_ceiling) {
      throw Error(ErrorCode::kNonTermination,
                  "balanced exponentiation used " + std::to_string(res.ledger.rounds()) +
                      " rounds, ceiling " + std::to_string(cfg.round_ceiling));
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Good subsets
// ---------------------------------------------------------------------------

/// A subset U with its center, the induced forest F[U] (edges in parent ids)
/// and the true degree of every member, which is all conservative peeling
/// needs.
struct GoodSubset {
  NodeId center = 0;
  std::optional<NodeId> excluded;  // the direction z left out, if any
  std::vector<NodeId> nodes;       // sorted
  std::vector<Edge> edges;         // induced, u < v
  std::vector<std::size_t> true_degree;  // aligned with nodes
};

/// Def. of a good subset evaluated from F[U] and true degrees only.
inline bool is_good_subset_local(const GoodSubset& s) {
  const std::size_t m = s.nodes.size();
  auto pos = [&](NodeId w) {
    return static_cast<std::size_t>(std::lower_bound(s.nodes.begin(), s.nodes.end(), w) -
                                    s.nodes.begin());
  };
  const std::size_t c = pos(s.center);
  if (c == m || s.nodes[c] != s.center) return false;
  std::vector<std::vector<std::size_t>> adj(m);
  for (const Edge& e : s.edges) {
    adj[pos(e.u)].push_back(pos(e.v));
    adj[pos(e.v)].push_back(pos(e.u));
  }
  if (s.true_degree[c] > adj[c].size() + 1) return false;
  const std::size_t L = ceil_log2(m + 1);
  std::vector<std::size_t> dist(m, static_cast<std::size_t>(-1));
  std::vector<std::size_t> queue{c};
  dist[c] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const std::size_t a = queue[h];
    if (a != c && dist[a] <= 3 * L && adj[a].size() != s.true_degree[a]) return false;
    for (std::size_t b : adj[a]) {
      if (dist[b] == static_cast<std::size_t>(-1)) {
        dist[b] = dist[a] + 1;
        queue.push_back(b);
      }
    }
  }
  return true;
}

struct GoodSubsetCollection {
  std::vector<GoodSubset> subsets;
  SpaceLedger ledger;
  std::size_t k = 0;
  std::size_t iterations = 0;
  std::size_t peak_total_tuples = 0;
};

/// k used for the good-subset construction: min(override, ceil(100 log2 n)),
/// never above epsilon_capacity.
inline std::size_t good_subset_k(const MpcConfig& cfg) {
  const std::size_t log_k = std::max<std::size_t>(1, 100 * ceil_log2(std::max<std::size_t>(cfg.n, 2)));
  return std::min({cfg.k_param, log_k, cfg.epsilon_capacity});
}

/// Runs balanced exponentiation and turns every node with at least deg-1
/// complete directions into a candidate U_v = {v} ∪ ⋃_{x != z} S_{v->x}.
/// Candidates for z, in order: the incomplete direction if there is one;
/// otherwise no exclusion when nothing is open, then open directions
/// (complete but with a frontier node at distance k still having unknown
/// neighbors) by decreasing id, then the rest by decreasing |S_{v->x}|.
/// The first candidate that passes the local goodness check is emitted.
inline GoodSubsetCollection good_subset_collection(const Forest& f, const MpcConfig& cfg_in,
                                                   bool simulate_mpc = false) {
  MpcConfig cfg = cfg_in;
  cfg.k_param = good_subset_k(cfg_in);
  GoodSubsetCollection out;
  out.k = cfg.k_param;
  BalexpOptions opts;
  opts.simulate_mpc = simulate_mpc;
  BalexpResult be = balanced_exponentiation(f, cfg, opts);
  out.ledger = std::move(be.ledger);
  out.iterations = be.iterations;
  out.peak_total_tuples = be.peak_total_tuples;
  const std::size_t k = cfg.k_param;

  std::vector<Query> degree_queries;
  for (NodeId v = 0; v < f.node_count(); ++v) {
    const KnowledgeSet& s = be.sets[v];
    const std::size_t d = s.degree();
    if (s.complete_count() + 1 < d) continue;
    // a set above cap3 does not fit the local peeling budget; important
    // nodes never get here
    if (s.size() > cfg.cap3) continue;

    // frontier: complete directions with a node at distance k that has
    // neighbors outside S_v
    std::vector<bool> open(d, false);
    {
      std::vector<std::uint32_t> induced(s.size(), 0);
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& t = s.tuples[i];
        if (t.target == v) continue;
        if (const KnowledgeTuple* p = s.find(t.last_hop)) {
          ++induced[i];
          ++induced[static_cast<std::size_t>(p - s.tuples.data())];
        }
      }
      for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& t = s.tuples[i];
        if (t.target != v && t.dist == k && induced[i] != f.degree(t.target)) {
          open[s.direction_index(t.first_hop)] = true;
        }
      }
    }
    std::vector<std::optional<std::size_t>> candidates;
    if (s.complete_count() < d) {
      for (std::size_t i = 0; i < d; ++i) {
        if (!s.complete[i]) candidates.push_back(i);
      }
    } else {
      if (std::none_of(open.begin(), open.end(), [](bool b) { return b; })) {
        candidates.push_back(std::nullopt);
      }
      for (std::size_t i = d; i-- > 0;) {
        if (open[i]) candidates.push_back(i);
      }
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < d; ++i) {
        if (!open[i]) rest.push_back(i);
      }
      std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
        if (s.direction_size[a] != s.direction_size[b]) {
          return s.direction_size[a] > s.direction_size[b];
        }
        return a > b;
      });
      for (std::size_t i : rest) candidates.push_back(i);
    }

    for (const auto& z : candidates) {
      GoodSubset g;
      g.center = v;
      if (z) g.excluded = s.directions[*z];
      for (const auto& t : s.tuples) {
        if (t.target == v || !z || t.first_hop != s.directions[*z]) g.nodes.push_back(t.target);
      }
      // tuples are sorted by target, so nodes already are
      for (const auto& t : s.tuples) {
        if (t.target == v) continue;
        if (z && t.first_hop == s.directions[*z]) continue;
        if (!std::binary_search(g.nodes.begin(), g.nodes.end(), t.last_hop)) continue;
        g.edges.push_back({std::min(t.target, t.last_hop), std::max(t.target, t.last_hop)});
      }
      std::sort(g.edges.begin(), g.edges.end());
      g.true_degree.reserve(g.nodes.size());
      for (NodeId w : g.nodes) g.true_degree.push_back(f.degree(w));
      if (is_good_subset_local(g)) {
        if (simulate_mpc) {
          for (NodeId w : g.nodes) degree_queries.push_back({w, v, 1});
        }
        out.subsets.push_back(std::move(g));
        break;
      }
    }
  }
  if (simulate_mpc) {
    const MachineAssignment placement = detail::place_sets(f, be.sets, cfg, degree_queries);
    query_exchange(degree_queries, placement, {}, {}, f, cfg, out.ledger, "subsets/degree", false);
  }
  return out;
}

}  // namespace treempc
