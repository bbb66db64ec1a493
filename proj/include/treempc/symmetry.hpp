#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "treempc/config.hpp"
#include "treempc/error.hpp"
#include "treempc/forest.hpp"
#include "treempc/layering.hpp"
#include "treempc/mpcsim.hpp"

namespace treempc {

using Color = std::uint32_t;
inline constexpr Color kNoColor = 0;

/// First monochromatic edge, if any. Uncolored endpoints count as a failure.
inline Verdict validate_coloring(const Forest& f, std::span<const Color> c,
                                 Color palette = 0) {
  if (c.size() != f.node_count()) {
    throw Error(ErrorCode::kDomainMismatch, "coloring covers " + std::to_string(c.size()) +
                                                " nodes, forest has " +
                                                std::to_string(f.node_count()));
  }
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (c[v] == kNoColor) return Verdict::fail(v, "uncolored");
    if (palette != 0 && c[v] > palette) return Verdict::fail(v, "color " + std::to_string(c[v]) + " outside palette");
    for (NodeId w : f.neighbors(v)) {
      if (c[w] == c[v]) return Verdict::fail(v, "shares color with " + std::to_string(w));
    }
  }
  return Verdict::pass();
}

namespace detail {

inline bool is_prime(std::size_t q) {
  if (q < 2) return false;
  for (std::size_t p = 2; p * p <= q; ++p) {
    if (q % p == 0) return false;
  }
  return true;
}

inline bool power_reaches(std::size_t q, std::size_t e, std::size_t m) {
  std::size_t acc = 1;
  for (std::size_t i = 0; i < e; ++i) {
    if (acc >= m) return true;
    acc *= q;
  }
  return acc >= m;
}

/// p(t) mod q where p's coefficients are the base-q digits of `color`.
inline std::size_t digit_polynomial(std::size_t color, std::size_t d, std::size_t q, std::size_t t) {
  std::vector<std::size_t> digits(d + 1, 0);
  for (std::size_t i = 0; i <= d; ++i) {
    digits[i] = color % q;
    color /= q;
  }
  std::size_t acc = 0;
  for (std::size_t i = d + 1; i-- > 0;) acc = (acc * t + digits[i]) % q;
  return acc;
}

}  // namespace detail

/// One polynomial color-reduction step on a max-degree-2 graph: colors in
/// [0, q^{d+1}) become colors in [0, q^2).
struct ReductionStep {
  std::size_t d = 1;
  std::size_t q = 3;
};

struct ReductionSchedule {
  std::vector<ReductionStep> steps;
  std::size_t palette = 1;  // colors after the last step
};

/// Greedy schedule starting from m id-colors: each step picks the (d, q)
/// with q prime, q > 2d and q^{d+1} >= m that gives the fewest colors, and
/// the schedule stops once no step shrinks the palette.
inline ReductionSchedule reduction_schedule(std::size_t m) {
  ReductionSchedule s;
  s.palette = std::max<std::size_t>(m, 1);
  while (true) {
    std::size_t best = s.palette;
    ReductionStep pick;
    for (std::size_t d = 1; d <= 64; ++d) {
      std::size_t q = 2 * d + 1;
      while (!detail::is_prime(q) || !detail::power_reaches(q, d + 1, s.palette)) ++q;
      if (q * q < best) {
        best = q * q;
        pick = {d, q};
      }
    }
    if (best >= s.palette) break;
    s.steps.push_back(pick);
    s.palette = best;
  }
  return s;
}

struct PivotColoring {
  std::vector<Color> color;           // kNoColor off the pivot set
  std::vector<bool> pivot;
  std::size_t reduction_rounds = 0;   // polynomial reduction steps
  std::size_t elimination_rounds = 0; // highest-color recolor steps
  std::size_t rounds = 0;             // simulated rounds in total
  SpaceLedger ledger;
};

namespace detail {

struct PivotProgram {
  struct State {
    bool active = false;
    std::size_t color = 1;
    std::vector<NodeId> peers;
  };
  using Message = std::size_t;

  const std::vector<bool>* pivot = nullptr;
  const ReductionSchedule* schedule = nullptr;
  std::size_t eliminations = 0;

  State init(NodeId v, const Forest& f) const {
    State s;
    if (!(*pivot)[v]) return s;
    for (NodeId w : f.neighbors(v)) {
      if ((*pivot)[w]) s.peers.push_back(w);
    }
    s.active = !s.peers.empty();
    s.color = s.active ? v + 1 : 1;
    return s;
  }

  bool step(NodeId, State& s, std::span<const Envelope<Message>> inbox,
            std::vector<Envelope<Message>>& outbox, std::size_t round) const {
    if (!s.active) return false;
    const std::size_t total = schedule->steps.size() + eliminations;
    if (round > 1) {
      const std::size_t k = round - 1;
      if (k <= schedule->steps.size()) {
        const auto [d, q] = schedule->steps[k - 1];
        std::size_t t = 0;
        for (; t < q; ++t) {
          const std::size_t mine = digit_polynomial(s.color - 1, d, q, t);
          bool clash = false;
          for (const auto& env : inbox) clash = clash || digit_polynomial(env.payload - 1, d, q, t) == mine;
          if (!clash) break;
        }
        s.color = t * q + digit_polynomial(s.color - 1, d, q, t) + 1;
      } else {
        const std::size_t target = schedule->palette - (k - schedule->steps.size() - 1);
        if (s.color == target) {
          std::size_t c = 1;
          auto used = [&](std::size_t x) {
            return std::any_of(inbox.begin(), inbox.end(), [&](const auto& e) { return e.payload == x; });
          };
          while (used(c)) ++c;
          s.color = c;
        }
      }
      if (k == total) return false;
    } else if (total == 0) {
      return false;
    }
    for (NodeId w : s.peers) outbox.push_back({0, w, s.color});
    return true;
  }

  std::size_t state_words(const State& s) const { return 2 + s.peers.size(); }
  std::size_t message_words(const Message&) const { return 1; }
};

inline void require_complete(const Forest& f, const Layering& l) {
  require_domain(f, l);
  if (const std::size_t left = l.infinite_count(); left > 0) {
    throw Error(ErrorCode::kIncompleteDecomposition, std::to_string(left) + " nodes at infinity");
  }
}

}  // namespace detail

/// Proper 3-coloring of F[pivots]: polynomial color reduction from the ids,
/// then one round per color above 3 in which that color class recolors
/// itself with the smallest free color. Pivots without pivot neighbors take 1.
inline PivotColoring color_pivots(const Forest& f, const Layering& l, const MpcConfig& cfg) {
  detail::require_complete(f, l);
  const std::size_t n = f.node_count();
  PivotColoring out;
  out.pivot = pivot_nodes(f, l);
  for (NodeId v = 0; v < n; ++v) {
    if (!out.pivot[v]) continue;
    std::size_t d = 0;
    for (NodeId w : f.neighbors(v)) d += out.pivot[w];
    if (d > 2) {
      throw Error(ErrorCode::kDegreeViolation,
                  "pivot " + std::to_string(v) + " has " + std::to_string(d) + " pivot neighbors");
    }
  }
  const ReductionSchedule schedule = reduction_schedule(n);
  detail::PivotProgram program;
  program.pivot = &out.pivot;
  program.schedule = &schedule;
  program.eliminations = schedule.palette > 3 ? schedule.palette - 3 : 0;
  auto run = run_rounds(program, f, cfg, "color/pivots");
  out.color.assign(n, kNoColor);
  for (NodeId v = 0; v < n; ++v) {
    if (out.pivot[v]) out.color[v] = static_cast<Color>(run.states[v].color);
  }
  out.reduction_rounds = schedule.steps.size();
  out.elimination_rounds = program.eliminations;
  out.rounds = run.ledger.rounds();
  out.ledger = std::move(run.ledger);
  return out;
}

struct Orientation {
  std::vector<NodeId> out;                  // kNoNode when none (and for pivots)
  std::vector<std::vector<Color>> forbidden;  // sorted, distinct
};

/// Non-pivot v points at the unique non-pivot neighbor above it (higher
/// layer, or same layer and larger id). Its forbidden colors are those of
/// its pivot neighbors at layer >= layer(v).
inline Orientation orient_and_forbid(const Forest& f, const Layering& l, const PivotColoring& pc) {
  detail::require_complete(f, l);
  const std::size_t n = f.node_count();
  Orientation o;
  o.out.assign(n, kNoNode);
  o.forbidden.resize(n);
  for (NodeId v = 0; v < n; ++v) {
    if (pc.pivot[v]) continue;
    for (NodeId w : f.neighbors(v)) {
      if (pc.pivot[w]) {
        if (l[w] >= l[v]) o.forbidden[v].push_back(pc.color[w]);
        continue;
      }
      if (l[w] > l[v] || (l[w] == l[v] && w > v)) {
        if (o.out[v] != kNoNode) {
          throw Error(ErrorCode::kStrictnessViolation,
                      "node " + std::to_string(v) + " has two outgoing edges");
        }
        o.out[v] = w;
      }
    }
    auto& fb = o.forbidden[v];
    std::sort(fb.begin(), fb.end());
    fb.erase(std::unique(fb.begin(), fb.end()), fb.end());
    if (fb.size() > 2 || (o.out[v] != kNoNode && fb.size() > 1)) {
      throw Error(ErrorCode::kStrictnessViolation,
                  "node " + std::to_string(v) + " has " + std::to_string(fb.size()) + " forbidden colors");
    }
  }
  return o;
}

struct PathColoring {
  std::vector<Color> color;
  std::size_t max_path_length = 0;  // nodes on the longest directed path
  std::size_t doubling_rounds = 0;
  SpaceLedger ledger;
};

/// Each non-pivot learns its directed path by pointer doubling, then every
/// node replays the greedy from the path's end: smallest color not forbidden
/// and not used by the out-neighbor.
inline PathColoring directed_path_color(const Forest& f, const Layering& l, const Orientation& o,
                                        const PivotColoring& pc, const MpcConfig& cfg) {
  detail::require_complete(f, l);
  const std::size_t n = f.node_count();
  PathColoring res;
  res.ledger = SpaceLedger(cfg.local_capacity);
  // jump[v]: node 2^r steps ahead (or the end); hops[v]: steps actually taken
  std::vector<NodeId> jump(n, kNoNode);
  std::vector<std::size_t> hops(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (pc.pivot[v]) continue;
    jump[v] = o.out[v] == kNoNode ? v : o.out[v];
    hops[v] = o.out[v] == kNoNode ? 0 : 1;
  }
  bool moving = true;
  while (moving) {
    ++res.doubling_rounds;
    std::vector<SortItem> requests;
    for (NodeId v = 0; v < n; ++v) {
      if (!pc.pivot[v] && o.out[jump[v]] != kNoNode) requests.push_back({jump[v], v, 3});
    }
    mpc_sort(requests, cfg, res.ledger, "color/doubling");
    moving = !requests.empty();
    std::vector<NodeId> next(jump);
    std::vector<std::size_t> next_hops(hops);
    for (const SortItem& r : requests) {
      const NodeId v = static_cast<NodeId>(r.order);
      next[v] = jump[jump[v]];
      next_hops[v] = hops[v] + hops[jump[v]];
    }
    jump = std::move(next);
    hops = std::move(next_hops);
  }
  std::size_t max_layer = l.max_finite();
  for (NodeId v = 0; v < n; ++v) {
    if (pc.pivot[v]) continue;
    res.max_path_length = std::max(res.max_path_length, hops[v] + 1);
  }
  if (res.max_path_length > max_layer + 1) {
    throw Error(ErrorCode::kPathTooLong, std::to_string(res.max_path_length) + " nodes on a directed path, max layer " +
                                             std::to_string(max_layer));
  }
  // replay: the end of every path first, then by distance to the end
  std::vector<NodeId> order;
  for (NodeId v = 0; v < n; ++v) {
    if (!pc.pivot[v]) order.push_back(v);
  }
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) { return hops[a] < hops[b]; });
  res.color = pc.color;
  for (NodeId v : order) {
    const auto& fb = o.forbidden[v];
    const Color up = o.out[v] == kNoNode ? kNoColor : res.color[o.out[v]];
    Color c = 1;
    while (c == up || std::find(fb.begin(), fb.end(), c) != fb.end()) ++c;
    res.color[v] = c;
  }
  res.ledger.charge("color/replay", 1);
  return res;
}

struct ThreeColoring {
  std::vector<Color> color;
  std::size_t max_path_length = 0;
  std::size_t pivot_rounds = 0;
  std::size_t doubling_rounds = 0;
  SpaceLedger ledger;
};

inline ThreeColoring three_color(const Forest& f, const Layering& l, const MpcConfig& cfg) {
  PivotColoring pc = color_pivots(f, l, cfg);
  const Orientation o = orient_and_forbid(f, l, pc);
  PathColoring pcol = directed_path_color(f, l, o, pc, cfg);
  ThreeColoring out;
  out.color = std::move(pcol.color);
  out.max_path_length = pcol.max_path_length;
  out.pivot_rounds = pc.rounds;
  out.doubling_rounds = pcol.doubling_rounds;
  out.ledger = SpaceLedger(cfg.local_capacity);
  out.ledger.absorb(pc.ledger);
  out.ledger.absorb(pcol.ledger);
  return out;
}

namespace detail {

inline void require_proper(const Forest& f, std::span<const Color> c) {
  if (Verdict v = validate_coloring(f, c); !v) {
    throw Error(ErrorCode::kImproperColoring, "node " + std::to_string(*v.node) + ": " + v.reason);
  }
}

inline Color max_color(std::span<const Color> c) {
  Color m = 0;
  for (Color x : c) m = std::max(m, x);
  return m;
}

}  // namespace detail

struct MisResult {
  std::vector<NodeId> nodes;  // sorted
  SpaceLedger ledger;
};

/// One sweep per color: still-free nodes of that color join, their
/// neighbors drop out.
inline MisResult mis_from_coloring(const Forest& f, std::span<const Color> c,
                                   std::size_t local_capacity = 0) {
  detail::require_proper(f, c);
  const std::size_t n = f.node_count();
  MisResult res;
  res.ledger = SpaceLedger(local_capacity);
  std::vector<bool> in(n, false);
  std::vector<bool> out(n, false);
  const Color palette = detail::max_color(c);
  for (Color i = 1; i <= palette; ++i) {
    for (NodeId v = 0; v < n; ++v) {
      if (c[v] == i && !out[v]) in[v] = true;
    }
    for (NodeId v = 0; v < n; ++v) {
      if (!in[v] || c[v] != i) continue;
      for (NodeId w : f.neighbors(v)) out[w] = true;
    }
    res.ledger.charge("mis/sweep", 1);
  }
  for (NodeId v = 0; v < n; ++v) {
    if (in[v]) res.nodes.push_back(v);
  }
  return res;
}

struct MatchingResult {
  std::vector<Edge> edges;  // u < v, sorted
  std::size_t max_proposal_rounds = 0;  // per color class
  SpaceLedger ledger;
};

/// Edges point to the strictly higher layer, ties toward the larger id. For
/// each color class, unmatched nodes propose to their highest-id unmatched
/// out-neighbor not yet tried; each acceptor takes the highest-id proposer.
/// Repeats until no class member has a candidate left.
inline MatchingResult matching_from_coloring(const Forest& f, const Layering& l,
                                             std::span<const Color> c,
                                             std::size_t local_capacity = 0) {
  detail::require_complete(f, l);
  detail::require_proper(f, c);
  const std::size_t n = f.node_count();
  MatchingResult res;
  res.ledger = SpaceLedger(local_capacity);
  std::vector<NodeId> mate(n, kNoNode);
  auto points_to = [&](NodeId v, NodeId w) { return l[w] > l[v] || (l[w] == l[v] && w > v); };
  const Color palette = detail::max_color(c);
  for (Color i = 1; i <= palette; ++i) {
    std::vector<std::vector<NodeId>> tried(n);
    std::size_t rounds = 0;
    while (true) {
      std::vector<NodeId> best(n, kNoNode);  // acceptor -> highest proposer
      bool any = false;
      for (NodeId v = 0; v < n; ++v) {
        if (c[v] != i || mate[v] != kNoNode) continue;
        NodeId pick = kNoNode;
        for (NodeId w : f.neighbors(v)) {
          if (!points_to(v, w) || mate[w] != kNoNode) continue;
          if (std::find(tried[v].begin(), tried[v].end(), w) != tried[v].end()) continue;
          pick = pick == kNoNode ? w : std::max(pick, w);
        }
        if (pick == kNoNode) continue;
        any = true;
        tried[v].push_back(pick);
        if (best[pick] == kNoNode || v > best[pick]) best[pick] = v;
      }
      if (!any) break;
      ++rounds;
      for (NodeId u = 0; u < n; ++u) {
        if (best[u] == kNoNode) continue;
        mate[u] = best[u];
        mate[best[u]] = u;
      }
      res.ledger.charge("matching/propose", 1);
    }
    res.max_proposal_rounds = std::max(res.max_proposal_rounds, rounds);
  }
  for (NodeId v = 0; v < n; ++v) {
    if (mate[v] != kNoNode && v < mate[v]) res.edges.push_back({v, mate[v]});
  }
  return res;
}

inline Verdict validate_mis(const Forest& f, std::span<const NodeId> set) {
  std::vector<bool> in(f.node_count(), false);
  for (NodeId v : set) {
    if (v >= f.node_count()) return Verdict::fail(v, "not a node");
    if (in[v]) return Verdict::fail(v, "listed twice");
    in[v] = true;
  }
  for (NodeId v = 0; v < f.node_count(); ++v) {
    bool covered = in[v];
    for (NodeId w : f.neighbors(v)) {
      if (in[v] && in[w]) return Verdict::fail(v, "adjacent to " + std::to_string(w) + " inside the set");
      covered = covered || in[w];
    }
    if (!covered) return Verdict::fail(v, "neither in the set nor adjacent to it");
  }
  return Verdict::pass();
}

inline Verdict validate_matching(const Forest& f, std::span<const Edge> edges) {
  std::vector<bool> matched(f.node_count(), false);
  for (const Edge& e : edges) {
    if (e.u >= f.node_count() || e.v >= f.node_count() || !f.has_edge(e.u, e.v)) {
      return Verdict::fail(std::min(e.u, e.v), "not an edge");
    }
    if (matched[e.u]) return Verdict::fail(e.u, "matched twice");
    if (matched[e.v]) return Verdict::fail(e.v, "matched twice");
    matched[e.u] = matched[e.v] = true;
  }
  for (const Edge& e : f.edges()) {
    if (!matched[e.u] && !matched[e.v]) {
      return Verdict::fail(e.u, "edge to " + std::to_string(e.v) + " has no matched endpoint");
    }
  }
  return Verdict::pass();
}

}  // namespace treempc
