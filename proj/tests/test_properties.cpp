#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "treempc/oracle.hpp"
#include "treempc/pipeline.hpp"

using namespace treempc;

namespace {

Forest random_forest(std::mt19937_64& rng, std::size_t n) {
  const auto kind = rng() % 2 ? GeneratorKind::kRandomTree : GeneratorKind::kRandomForest;
  return generate(kind, n, rng());
}

std::vector<NodeId> random_subset(std::mt19937_64& rng, std::size_t n) {
  std::vector<NodeId> u;
  const std::uint64_t keep = 1 + rng() % 4;  // keep with probability keep/4
  for (NodeId v = 0; v < n; ++v) {
    if (rng() % 4 < keep) u.push_back(v);
  }
  if (u.empty()) u.push_back(static_cast<NodeId>(rng() % n));
  return u;
}

// same forest with node v renamed perm[v]
Forest relabel(const Forest& f, const std::vector<NodeId>& perm) {
  std::vector<Edge> e;
  for (const Edge& x : f.edges()) e.push_back({perm[x.u], perm[x.v]});
  return build_forest(e, f.node_count());
}

}  // namespace

TEST(MinClosure, ExhaustiveOnTreesUpToSixNodes) {
  for (std::size_t n = 1; n <= 6; ++n) {
    for (const Forest& t : oracle::all_trees(n)) {
      std::vector<Layering> valid;
      for (const Layering& l : oracle::enumerate_layerings(n)) {
        if (validate_strict_h(t, l)) valid.push_back(l);
      }
      ASSERT_FALSE(valid.empty());
      for (const auto& a : valid) {
        for (const auto& b : valid) ASSERT_TRUE(validate_strict_h(t, min_combine(a, b)));
      }
    }
  }
}

TEST(MinClosure, RandomPeelingsOnLargerForests) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t n = 10 + rng() % 60;
    const Forest f = random_forest(rng, n);
    const Layering a = conservative_peeling(f, random_subset(rng, n));
    const Layering b = conservative_peeling(f, random_subset(rng, n));
    ASSERT_TRUE(validate_strict_h(f, a));
    ASSERT_TRUE(validate_strict_h(f, b));
    ASSERT_TRUE(validate_strict_h(f, min_combine(a, b))) << trial;
  }
}

TEST(PeelingLocality, RandomLargerCasesMatchTheOracle) {
  std::mt19937_64 rng(56);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 11 + rng() % 50;
    const Forest f = random_forest(rng, n);
    const auto u = random_subset(rng, n);
    ASSERT_EQ(conservative_peeling(f, u), oracle::conservative_peeling_oracle(f, oracle::as_mask(n, u)))
        << trial;
  }
}

TEST(PeelingLocality, OnlyTheInducedPieceAndTrueDegreesMatter) {
  // two forests that agree on F[U] and on the degrees of U get the same
  // layers on U
  std::mt19937_64 rng(78);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + rng() % 20;
    const Forest f = generate(GeneratorKind::kRandomTree, n, rng());
    const auto u = random_subset(rng, n);
    const auto in_u = oracle::as_mask(n, u);
    // hang every outside edge of U onto a fresh leaf instead
    std::vector<Edge> e;
    std::size_t next = n;
    for (const Edge& x : f.edges()) {
      if (in_u[x.u] && in_u[x.v]) {
        e.push_back(x);
      } else if (in_u[x.u]) {
        e.push_back({x.u, static_cast<NodeId>(next++)});
      } else if (in_u[x.v]) {
        e.push_back({x.v, static_cast<NodeId>(next++)});
      }
    }
    const Forest g = build_forest(e, next);
    const Layering a = conservative_peeling(f, u);
    const Layering b = conservative_peeling(g, u);
    for (NodeId v : u) ASSERT_EQ(a[v], b[v]) << trial;
  }
}

TEST(GoodSubsets, CenterIsLayeredWithinTheLogBound) {
  for (auto kind : {GeneratorKind::kPath, GeneratorKind::kCaterpillar, GeneratorKind::kRandomTree,
                    GeneratorKind::kRandomForest, GeneratorKind::kBalancedBinary}) {
    for (std::uint64_t seed : {1, 2, 3}) {
      const Forest f = generate(kind, 200, seed);
      const MpcConfig cfg = MpcConfig::make(200, 0.5);
      const GoodSubsetCollection c = good_subset_collection(f, cfg);
      for (const GoodSubset& s : c.subsets) {
        ASSERT_TRUE(oracle::is_good_subset(f, oracle::as_mask(200, s.nodes), s.center));
        const Layering l = conservative_peeling(f, s.nodes);
        EXPECT_LE(l[s.center], ceil_log2(s.nodes.size() + 1));
      }
    }
  }
}

TEST(Determinism, ReportsAreIdenticalAcrossRuns) {
  for (auto kind : {GeneratorKind::kStar, GeneratorKind::kRandomTree, GeneratorKind::kRandomForest}) {
    const Forest f = generate(kind, 700, 8);
    for (Task task : {Task::kHDecomp, Task::kColor, Task::kMis, Task::kMatching}) {
      RunOptions opts;
      opts.task = task;
      opts.mode = Mode::kMpc;
      const auto a = make_report(f, opts, run_task(f, opts)).dump();
      const auto b = make_report(f, opts, run_task(f, opts)).dump();
      EXPECT_EQ(a, b);
    }
  }
}

TEST(Relabeling, OutputsStayValid) {
  std::mt19937_64 rng(90);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 50 + rng() % 300;
    const Forest f = random_forest(rng, n);
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    const Forest g = relabel(f, perm);
    RunOptions opts;
    opts.task = trial % 2 ? Task::kMatching : Task::kMis;
    opts.delta = trial % 3 ? 0.5 : 0.3;
    EXPECT_TRUE(report_passes(run_task(f, opts)));
    EXPECT_TRUE(report_passes(run_task(g, opts)));
  }
}

TEST(Pipeline, LayeringStaysStrictUnderConfigSweep) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 20 + rng() % 400;
    const Forest f = random_forest(rng, n);
    const double delta = 0.2 + 0.1 * static_cast<double>(rng() % 8);
    const MpcConfig cfg = MpcConfig::make(n, delta);
    const HDecompResult r = strict_h_decomp(f, cfg);
    ASSERT_TRUE(validate_strict_h(f, r.layering));
    for (const auto& it : r.iterations) {
      // nodes are layered once: the two removal lists never overlap
      std::vector<NodeId> a = it.by_subtree;
      std::vector<NodeId> b = it.by_peel;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      std::vector<NodeId> both;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(both));
      EXPECT_TRUE(both.empty());
    }
  }
}
