#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "treempc/config.hpp"
#include "treempc/error.hpp"
#include "treempc/forest.hpp"

namespace treempc {

struct Violation {
  std::size_t round = 0;
  std::size_t machine = 0;
  std::size_t words = 0;
  std::string what;
};

struct PhaseCharge {
  std::string phase;
  std::size_t rounds = 0;
};

/// Round and space accounting for one simulated execution. Capacity
/// problems are recorded as violations; nothing here throws.
class SpaceLedger {
 public:
  SpaceLedger() = default;
  explicit SpaceLedger(std::size_t local_capacity) : capacity_(local_capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t rounds() const { return rounds_; }
  std::size_t global_peak_words() const { return global_peak_; }
  std::size_t machine_peak_words() const { return machine_peak_; }
  std::size_t max_sent_words() const { return max_sent_; }
  std::size_t max_received_words() const { return max_received_; }
  const std::vector<Violation>& violations() const { return violations_; }
  const std::vector<PhaseCharge>& phases() const { return phases_; }

  /// Adds `count` rounds to the clock under `phase`. Consecutive charges to
  /// the same phase are merged.
  void charge(const std::string& phase, std::size_t count) {
    if (count == 0) return;
    rounds_ += count;
    if (!phases_.empty() && phases_.back().phase == phase) {
      phases_.back().rounds += count;
    } else {
      phases_.push_back({phase, count});
    }
  }

  std::size_t charged_total() const {
    std::size_t total = 0;
    for (const auto& p : phases_) total += p.rounds;
    return total;
  }

  /// Per-machine storage at a round boundary.
  void record_loads(std::span<const std::size_t> machine_words, const std::string& what) {
    std::size_t total = 0;
    for (std::size_t m = 0; m < machine_words.size(); ++m) {
      total += machine_words[m];
      machine_peak_ = std::max(machine_peak_, machine_words[m]);
      if (machine_words[m] > capacity_) {
        violations_.push_back({rounds_, m, machine_words[m], what + ": storage"});
      }
    }
    global_peak_ = std::max(global_peak_, total);
  }

  void record_global(std::size_t words) { global_peak_ = std::max(global_peak_, words); }

  void record_traffic(std::span<const std::size_t> sent, std::span<const std::size_t> received,
                      const std::string& what) {
    for (std::size_t m = 0; m < sent.size(); ++m) {
      max_sent_ = std::max(max_sent_, sent[m]);
      if (sent[m] > capacity_) violations_.push_back({rounds_, m, sent[m], what + ": sent"});
    }
    for (std::size_t m = 0; m < received.size(); ++m) {
      max_received_ = std::max(max_received_, received[m]);
      if (received[m] > capacity_) {
        violations_.push_back({rounds_, m, received[m], what + ": received"});
      }
    }
  }

  void record_violation(Violation v) {
    v.round = rounds_;
    violations_.push_back(std::move(v));
  }

  /// Folds another ledger into this one as if its rounds ran after ours.
  void absorb(const SpaceLedger& other) {
    for (const auto& p : other.phases_) charge(p.phase, p.rounds);
    global_peak_ = std::max(global_peak_, other.global_peak_);
    machine_peak_ = std::max(machine_peak_, other.machine_peak_);
    max_sent_ = std::max(max_sent_, other.max_sent_);
    max_received_ = std::max(max_received_, other.max_received_);
    for (const auto& v : other.violations_) violations_.push_back(v);
  }

 private:
  std::size_t capacity_ = 0;
  std::size_t rounds_ = 0;
  std::size_t global_peak_ = 0;
  std::size_t machine_peak_ = 0;
  std::size_t max_sent_ = 0;
  std::size_t max_received_ = 0;
  std::vector<Violation> violations_;
  std::vector<PhaseCharge> phases_;
};

/// Node -> machine placement. A node spans machines
/// [first_machine, first_machine + span) with span > 1 only for nodes that
/// were allowed to split.
struct MachineAssignment {
  std::vector<std::size_t> first_machine;
  std::vector<std::size_t> span;
  std::vector<std::size_t> load;  // words per machine

  std::size_t machine_count() const { return load.size(); }
  std::size_t machine_of(NodeId v) const { return first_machine[v]; }
};

/// First-fit packing over consecutive machines in node order. Nodes with
/// may_split[v] spread over as many fresh machines as they need; any other
/// node larger than one machine gets a machine of its own and will show up
/// as a storage violation.
inline MachineAssignment pack_nodes(std::span<const std::size_t> words,
                                    const std::vector<bool>& may_split, std::size_t capacity) {
  MachineAssignment a;
  a.first_machine.resize(words.size());
  a.span.assign(words.size(), 1);
  for (std::size_t v = 0; v < words.size(); ++v) {
    const std::size_t w = words[v];
    if (!a.load.empty() && a.load.back() + w <= capacity) {
      a.first_machine[v] = a.load.size() - 1;
      a.load.back() += w;
      continue;
    }
    if (w > capacity && v < may_split.size() && may_split[v]) {
      const std::size_t parts = (w + capacity - 1) / capacity;
      a.first_machine[v] = a.load.size();
      a.span[v] = parts;
      for (std::size_t p = 0; p < parts; ++p) {
        a.load.push_back(std::min(capacity, w - p * capacity));
      }
      continue;
    }
    a.first_machine[v] = a.load.size();
    a.load.push_back(w);
  }
  return a;
}

struct AggregationTree {
  std::uint64_t key = 0;
  std::size_t first_leaf = 0;  // machine index
  std::size_t leaf_count = 0;
  std::size_t fan_out = 0;
  std::size_t depth = 0;
  std::size_t inner_nodes = 0;
};

/// Depth of a tree with `leaves` leaves and `fan_out` children per node.
inline std::size_t tree_depth(std::size_t leaves, std::size_t fan_out) {
  std::size_t depth = 0;
  std::size_t reach = 1;
  while (reach < leaves) {
    reach *= fan_out;
    ++depth;
  }
  return depth;
}

inline std::size_t tree_inner_nodes(std::size_t leaves, std::size_t fan_out) {
  std::size_t inner = 0;
  std::size_t level = leaves;
  while (level > 1) {
    level = (level + fan_out - 1) / fan_out;
    inner += level;
  }
  return inner;
}

struct SortItem {
  std::uint64_t group = 0;   // primary key; aggregation trees are built per group
  std::uint64_t order = 0;   // secondary key
  std::size_t words = 1;
};

struct SortResult {
  std::vector<std::size_t> permutation;  // sorted position -> input index
  std::vector<std::size_t> machine;      // input index -> machine
  std::vector<std::size_t> load;         // words per machine
  std::vector<AggregationTree> trees;    // groups spanning >= 2 machines
  AggregationTree global;                // tree over all machines
};

/// Stable lexicographic sort onto consecutive machines filled to half
/// capacity, plus one search / broadcast tree per group spread over two or
/// more machines.
inline SortResult mpc_sort(std::span<const SortItem> items, const MpcConfig& cfg,
                           SpaceLedger& ledger, const std::string& phase = "sort") {
  SortResult r;
  r.permutation.resize(items.size());
  std::iota(r.permutation.begin(), r.permutation.end(), std::size_t{0});
  std::stable_sort(r.permutation.begin(), r.permutation.end(), [&](std::size_t a, std::size_t b) {
    if (items[a].group != items[b].group) return items[a].group < items[b].group;
    return items[a].order < items[b].order;
  });
  r.machine.resize(items.size());
  // half full, so broadcast copies landing on a machine still fit
  const std::size_t cap = std::max<std::size_t>(1, cfg.local_capacity / 2);
  for (std::size_t pos = 0; pos < r.permutation.size(); ++pos) {
    const std::size_t idx = r.permutation[pos];
    const std::size_t w = items[idx].words;
    if (r.load.empty() || r.load.back() + w > cap) r.load.push_back(0);
    r.load.back() += w;
    r.machine[idx] = r.load.size() - 1;
  }
  const std::size_t f = std::max<std::size_t>(2, cfg.fan_out);
  for (std::size_t pos = 0; pos < r.permutation.size();) {
    const std::uint64_t g = items[r.permutation[pos]].group;
    const std::size_t first = r.machine[r.permutation[pos]];
    std::size_t end = pos;
    while (end < r.permutation.size() && items[r.permutation[end]].group == g) ++end;
    const std::size_t last = r.machine[r.permutation[end - 1]];
    if (last > first) {
      const std::size_t leaves = last - first + 1;
      r.trees.push_back({g, first, leaves, f, tree_depth(leaves, f), tree_inner_nodes(leaves, f)});
    }
    pos = end;
  }
  const std::size_t m = r.load.size();
  r.global = {0, 0, m, f, tree_depth(m, f), tree_inner_nodes(m, f)};
  ledger.record_loads(r.load, phase);
  // every item moves once: machine m sends and receives at most its load
  ledger.record_traffic(r.load, r.load, phase);
  ledger.charge(phase, cfg.round_charge);
  return r;
}

struct Query {
  NodeId target = 0;
  NodeId asker = 0;
  std::size_t reply_words = 1;
};

struct ExchangeStats {
  std::size_t queries = 0;
  std::size_t targets = 0;
  std::size_t max_broadcast_depth = 0;
  std::size_t max_received = 0;
};

/// Accounting for one round trip of queries.
///
/// Query records (target, asker) and, for every queried target whose answer
/// lives in S_w, one record (w, S_w) of `knowledge_words(w)` words are sorted
/// by target. Each target's knowledge record is broadcast down the group's
/// tree; every query record then carries its reply back to the asker's
/// machine. When `needs_knowledge` is set, targets that could never have been
/// answered (degree above cap3 or |S_w| above cap6) raise UnanswerableTarget.
inline ExchangeStats query_exchange(std::span<const Query> queries, const MachineAssignment& askers,
                                    const std::function<std::size_t(NodeId)>& knowledge_words,
                                    const std::function<std::size_t(NodeId)>& knowledge_size,
                                    const Forest& f, const MpcConfig& cfg, SpaceLedger& ledger,
                                    const std::string& phase, bool needs_knowledge = true) {
  ExchangeStats stats;
  stats.queries = queries.size();
  std::vector<SortItem> items;
  items.reserve(queries.size() + 16);
  std::vector<NodeId> targets;
  targets.reserve(queries.size());
  for (const Query& q : queries) targets.push_back(q.target);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
  stats.targets = targets.size();
  for (NodeId w : targets) {
    if (needs_knowledge) {
      if (f.degree(w) > cfg.cap3) {
        throw Error(ErrorCode::kUnanswerableTarget,
                    "node " + std::to_string(w) + " has degree " + std::to_string(f.degree(w)));
      }
      if (knowledge_size(w) > cfg.cap6) {
        throw Error(ErrorCode::kUnanswerableTarget,
                    "node " + std::to_string(w) + " holds " + std::to_string(knowledge_size(w)) +
                        " tuples");
      }
    }
    items.push_back({w, 0, needs_knowledge ? knowledge_words(w) : 2});
  }
  for (const Query& q : queries) {
    items.push_back({q.target, std::uint64_t{q.asker} + 1, 2 + q.reply_words});
  }
  if (items.empty()) {
    ledger.charge(phase, cfg.round_charge);
    return stats;
  }

  // Sort by target (charged inside), then broadcast and reply.
  const SortResult sorted = mpc_sort(items, cfg, ledger, phase);

  // Broadcast: every machine of a group receives one copy of the target's
  // record from its parent in the tree.
  std::vector<std::size_t> received(sorted.load.size(), 0);
  std::vector<std::size_t> sent(sorted.load.size(), 0);
  std::vector<std::size_t> holding(sorted.load);
  for (const auto& tree : sorted.trees) {
    stats.max_broadcast_depth = std::max(stats.max_broadcast_depth, tree.depth);
  }
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const std::size_t rec = sorted.machine[i];  // items[i] is target i's record
    const std::size_t words = items[i].words;
    // trees come out in group order
    const auto it = std::lower_bound(
        sorted.trees.begin(), sorted.trees.end(), std::uint64_t{targets[i]},
        [](const AggregationTree& t, std::uint64_t key) { return t.key < key; });
    if (it == sorted.trees.end() || it->key != targets[i]) continue;
    for (std::size_t m = it->first_leaf; m < it->first_leaf + it->leaf_count; ++m) {
      if (m == rec) continue;
      received[m] += words;
      holding[m] += words;
    }
    // the root's fan-out is bounded, so the sender cost per machine is at most
    // fan_out copies; attribute them to the record's machine
    sent[rec] += words * std::min(it->leaf_count - 1, it->fan_out);
  }
  ledger.record_loads(holding, phase + "/broadcast");
  ledger.record_traffic(sent, received, phase + "/broadcast");

  // Replies travel back to the askers' machines.
  std::vector<std::size_t> reply_sent(sorted.load.size(), 0);
  std::vector<std::size_t> reply_recv(std::max<std::size_t>(askers.machine_count(), 1), 0);
  std::vector<std::size_t> turn(askers.first_machine.size(), 0);
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const std::size_t idx = targets.size() + q;
    reply_sent[sorted.machine[idx]] += queries[q].reply_words;
    const NodeId a = queries[q].asker;
    if (a < askers.first_machine.size()) {
      // split nodes spread their replies across their machines
      const std::size_t first = askers.first_machine[a];
      const std::size_t spread = askers.span[a];
      reply_recv[first + (turn[a]++ % spread)] += queries[q].reply_words;
    }
  }
  ledger.record_traffic(reply_sent, reply_recv, phase + "/reply");
  for (std::size_t r : reply_recv) stats.max_received = std::max(stats.max_received, r);
  for (std::size_t r : received) stats.max_received = std::max(stats.max_received, r);
  return stats;
}

// ---------------------------------------------------------------------------
// Generic round driver
// ---------------------------------------------------------------------------

template <class Msg>
struct Envelope {
  NodeId from = 0;
  NodeId to = 0;
  Msg payload{};
};

template <class State>
struct RunResult {
  std::vector<State> states;
  SpaceLedger ledger;
};

/// Runs a synchronous node program. `Program` provides
///
///   using State = ...; using Message = ...;
///   State init(NodeId v, const Forest& f) const;
///   bool step(NodeId v, State& s, std::span<const Envelope<Message>> inbox,
///             std::vector<Envelope<Message>>& outbox, std::size_t round) const;
///   std::size_t state_words(const State& s) const;
///   std::size_t message_words(const Message& m) const;
///
/// `step` returns true while the node wants to keep running. A halted node is
/// woken only by incoming mail. The run ends when every node has halted and
/// nothing is in flight. Outboxes are merged in (sender, emission order), so
/// results do not depend on the order nodes are evaluated in.
template <class Program>
RunResult<typename Program::State> run_rounds(const Program& program, const Forest& f,
                                              const MpcConfig& cfg,
                                              const std::string& phase = "program") {
  using State = typename Program::State;
  using Message = typename Program::Message;
  const std::size_t n = f.node_count();
  RunResult<State> result;
  result.ledger = SpaceLedger(cfg.local_capacity);
  result.states.reserve(n);
  for (NodeId v = 0; v < n; ++v) result.states.push_back(program.init(v, f));
  std::vector<bool> running(n, true);
  std::vector<std::vector<Envelope<Message>>> inbox(n);
  std::vector<bool> split(n, false);
  for (NodeId v = 0; v < n; ++v) split[v] = f.degree(v) > cfg.cap3;

  std::size_t round = 0;
  while (true) {
    bool any = false;
    for (NodeId v = 0; v < n && !any; ++v) any = running[v] || !inbox[v].empty();
    if (!any) break;
    if (round >= cfg.round_ceiling) {
      throw Error(ErrorCode::kNonTermination,
                  phase + " still running after " + std::to_string(round) + " rounds");
    }
    ++round;
    std::vector<std::size_t> words(n);
    for (NodeId v = 0; v < n; ++v) words[v] = program.state_words(result.states[v]);
    const MachineAssignment placement = pack_nodes(words, split, cfg.local_capacity);

    std::vector<std::vector<Envelope<Message>>> outboxes(n);
    for (NodeId v = 0; v < n; ++v) {
      if (!running[v] && inbox[v].empty()) continue;
      running[v] = program.step(v, result.states[v], inbox[v], outboxes[v], round);
    }
    for (auto& box : inbox) box.clear();
    std::vector<std::size_t> sent(placement.machine_count(), 0);
    std::vector<std::size_t> received(placement.machine_count(), 0);
    for (NodeId v = 0; v < n; ++v) {
      for (auto& env : outboxes[v]) {
        env.from = v;
        if (env.to >= n) {
          throw Error(ErrorCode::kNodeOutOfRange, "message to " + std::to_string(env.to));
        }
        const std::size_t w = program.message_words(env.payload);
        sent[placement.machine_of(v)] += w;
        received[placement.machine_of(env.to)] += w;
        inbox[env.to].push_back(std::move(env));
      }
    }
    result.ledger.record_loads(placement.load, phase);
    result.ledger.record_traffic(sent, received, phase);
    result.ledger.charge(phase, 1);
  }
  return result;
}

}  // namespace treempc
