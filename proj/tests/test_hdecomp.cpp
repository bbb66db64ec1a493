#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "treempc/hdecomp.hpp"
#include "treempc/oracle.hpp"

using namespace treempc;

namespace {

GoodSubset make_subset(const Forest& f, std::vector<NodeId> nodes, NodeId center) {
  std::sort(nodes.begin(), nodes.end());
  GoodSubset g;
  g.center = center;
  g.nodes = nodes;
  for (const Edge& e : f.edges()) {
    if (std::binary_search(nodes.begin(), nodes.end(), e.u) &&
        std::binary_search(nodes.begin(), nodes.end(), e.v)) {
      g.edges.push_back({std::min(e.u, e.v), std::max(e.u, e.v)});
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  for (NodeId v : nodes) g.true_degree.push_back(f.degree(v));
  return g;
}

Layering layers(std::initializer_list<Layer> xs) { return Layering(std::vector<Layer>(xs)); }

constexpr Layer I = kInfinity;

std::vector<Forest> corpus(std::size_t n) {
  std::vector<Forest> out;
  for (auto kind : {GeneratorKind::kPath, GeneratorKind::kStar, GeneratorKind::kCaterpillar,
                    GeneratorKind::kBalancedBinary, GeneratorKind::kRandomTree,
                    GeneratorKind::kRandomForest}) {
    for (std::uint64_t seed : {1, 2, 3}) out.push_back(generate(kind, n, seed));
  }
  return out;
}

// subtrees of at most x nodes, then nodes on maximal degree-2 paths of at
// least ell nodes in what is left
std::vector<bool> raked_or_compressed(const Forest& f, std::size_t x, std::size_t ell) {
  const std::size_t n = f.node_count();
  std::vector<bool> out = oracle::in_small_subtree(f, x);
  std::vector<std::size_t> deg(n, 0);
  for (NodeId v = 0; v < n; ++v) {
    if (out[v]) continue;
    for (NodeId w : f.neighbors(v)) deg[v] += !out[w];
  }
  std::vector<bool> on_path(n, false);
  for (NodeId v = 0; v < n; ++v) on_path[v] = !out[v] && deg[v] == 2;
  std::vector<bool> blocked(n, false);
  for (NodeId v = 0; v < n; ++v) blocked[v] = !on_path[v];
  std::vector<bool> done(n, false);
  for (NodeId v = 0; v < n; ++v) {
    if (!on_path[v] || done[v]) continue;
    const auto comp = oracle::reach(f, v, blocked);
    for (NodeId w : comp) done[w] = true;
    if (comp.size() >= ell) {
      for (NodeId w : comp) out[w] = true;
    }
  }
  return out;
}

std::size_t layer_bound(const MpcConfig& cfg, std::size_t n) {
  return (cfg.hdecomp_iterations() + 1) * MpcConfig::offset_for(n);
}

}  // namespace

TEST(ValidatePartialH, Examples) {
  const Forest p3 = generate(GeneratorKind::kPath, 3, 0);
  EXPECT_TRUE(validate_partial_h(p3, Layering(3)));
  EXPECT_TRUE(validate_partial_h(p3, layers({1, 1, 1})));
  const Forest star = generate(GeneratorKind::kStar, 4, 0);
  const Verdict v = validate_partial_h(star, layers({1, 1, 1, 1}));
  EXPECT_FALSE(v);
  EXPECT_EQ(v.node, 0u);
  EXPECT_THROW(validate_partial_h(star, Layering(3)), Error);
}

TEST(ValidateStrictH, Examples) {
  const Forest p3 = generate(GeneratorKind::kPath, 3, 0);
  const Layering l = layers({1, 2, 1});
  EXPECT_EQ(pivot_nodes(p3, l), (std::vector<bool>{false, true, false}));
  EXPECT_TRUE(validate_strict_h(p3, l));
  const Forest p5 = generate(GeneratorKind::kPath, 5, 0);
  const Layering ones(5, 1);
  const auto piv = pivot_nodes(p5, ones);
  EXPECT_TRUE(std::all_of(piv.begin(), piv.end(), [](bool b) { return b; }));
  EXPECT_TRUE(validate_strict_h(p5, ones));
  // middle node has two strictly higher neighbors
  const Layering bad = layers({2, 1, 2});
  EXPECT_TRUE(validate_partial_h(p3, bad));
  const Verdict v = validate_strict_h(p3, bad);
  EXPECT_FALSE(v);
  EXPECT_EQ(v.node, 1u);
}

TEST(ValidateStrictH, CounterexamplesExistInEnumeration) {
  // partial-H layerings of a path of 4 that are not strict
  const Forest p4 = generate(GeneratorKind::kPath, 4, 0);
  std::size_t partial = 0;
  std::size_t strict = 0;
  for (const Layering& l : oracle::enumerate_layerings(4)) {
    partial += static_cast<bool>(validate_partial_h(p4, l));
    strict += static_cast<bool>(validate_strict_h(p4, l));
  }
  EXPECT_EQ(partial, 81u);  // max degree 2: every map is partial H
  EXPECT_LT(strict, partial);
  EXPECT_GT(strict, 0u);
}

TEST(MinCombine, Examples) {
  EXPECT_EQ(min_combine(layers({1, I}), layers({2, 1})), layers({1, 1}));
  const Layering l = layers({3, 1, I, 2});
  EXPECT_EQ(min_combine(l, Layering(4)), l);
  try {
    min_combine(Layering(2), Layering(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDomainMismatch);
  }
}

TEST(ConservativePeeling, Examples) {
  const Forest p5 = generate(GeneratorKind::kPath, 5, 0);
  const std::vector<NodeId> all5{0, 1, 2, 3, 4};
  EXPECT_EQ(conservative_peeling(p5, all5), Layering(5, 1));

  const Forest star = generate(GeneratorKind::kStar, 5, 0);
  EXPECT_EQ(conservative_peeling(star, all5), layers({2, 1, 1, 1, 1}));

  const Forest star6 = generate(GeneratorKind::kStar, 6, 0);
  const std::vector<NodeId> center{0};
  EXPECT_EQ(conservative_peeling(star6, center)[0], I);

  try {
    conservative_peeling(p5, std::vector<NodeId>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySubset);
  }
}

TEST(ConservativePeeling, MatchesFullKnowledgeOracle) {
  for (std::size_t n = 1; n <= 7; ++n) {
    for (const Forest& t : oracle::all_trees(n)) {
      for (const auto& U : oracle::enumerate_subsets(n)) {
        if (U.empty()) continue;
        const Layering got = conservative_peeling(t, U);
        EXPECT_EQ(got, oracle::conservative_peeling_oracle(t, oracle::as_mask(n, U)));
        EXPECT_TRUE(validate_strict_h(t, got));
      }
    }
  }
}

TEST(ConservativePeeling, GoodSubsetCenterIsLayeredEarly) {
  std::mt19937_64 rng(7);
  std::size_t witnesses = 0;
  for (std::uint64_t seed = 1; seed <= 60; ++seed) {
    const Forest f = generate(GeneratorKind::kRandomTree, 40, seed);
    for (NodeId v = 0; v < f.node_count(); v += 3) {
      for (NodeId z : f.neighbors(v)) {
        // everything except direction z, cut at a random radius
        const std::size_t r = 1 + rng() % 8;
        auto U = oracle::direction_ball(f, v, z, 0);
        U.push_back(v);
        for (NodeId x : f.neighbors(v)) {
          if (x == z) continue;
          const auto side = oracle::direction_ball(f, v, x, r);
          U.insert(U.end(), side.begin(), side.end());
        }
        std::sort(U.begin(), U.end());
        if (!oracle::is_good_subset(f, oracle::as_mask(f.node_count(), U), v)) continue;
        ++witnesses;
        const Layering l = conservative_peeling(f, U);
        EXPECT_LE(l[v], ceil_log2(U.size() + 1));
      }
    }
  }
  EXPECT_GT(witnesses, 100u);
}

TEST(MinCombine, ExhaustiveClosureOnSmallTrees) {
  for (std::size_t n = 1; n <= 5; ++n) {
    for (const Forest& t : oracle::all_trees(n)) {
      std::vector<Layering> valid;
      for (const Layering& l : oracle::enumerate_layerings(n)) {
        if (validate_strict_h(t, l)) valid.push_back(l);
      }
      for (const auto& a : valid) {
        for (const auto& b : valid) ASSERT_TRUE(validate_strict_h(t, min_combine(a, b)));
      }
    }
  }
}

TEST(SubtreeRc, SingleSubsetEqualsPeeling) {
  const Forest p = generate(GeneratorKind::kPath, 9, 0);
  std::vector<NodeId> all(9);
  std::iota(all.begin(), all.end(), NodeId{0});
  const std::vector<GoodSubset> one{make_subset(p, all, 0)};
  EXPECT_EQ(subtree_rc(p, one), conservative_peeling(p, all));
}

TEST(SubtreeRc, TakesTheMinimumOverSubsets) {
  // find two subsets of a small tree that give some shared node different
  // layers, then check the combination keeps the smaller one
  const Forest t = build_forest({{0, 1}, {0, 2}, {0, 3}, {3, 4}, {4, 5}, {4, 6}}, 7);
  const auto subsets = oracle::enumerate_subsets(7);
  bool found = false;
  for (std::size_t i = 0; i < subsets.size() && !found; ++i) {
    if (subsets[i].empty()) continue;
    const Layering a = conservative_peeling(t, subsets[i]);
    for (std::size_t j = 0; j < subsets.size() && !found; ++j) {
      if (subsets[j].empty()) continue;
      const Layering b = conservative_peeling(t, subsets[j]);
      for (NodeId v = 0; v < 7; ++v) {
        if (b.finite(v) && a[v] > b[v]) {
          found = true;
          const std::vector<GoodSubset> two{make_subset(t, subsets[i], v), make_subset(t, subsets[j], v)};
          const Layering c = subtree_rc(t, two);
          EXPECT_EQ(c[v], b[v]);
          EXPECT_EQ(c, min_combine(a, b));
          break;
        }
      }
    }
  }
  EXPECT_TRUE(found);
}

TEST(SubtreeRc, SimulatedMinAgreesWithDirectMerge) {
  for (const Forest& f : corpus(150)) {
    const MpcConfig cfg = MpcConfig::make(150, 0.5);
    const GoodSubsetCollection c = good_subset_collection(f, cfg);
    SpaceLedger ledger(cfg.local_capacity);
    const Layering direct = subtree_rc(f, c.subsets);
    const Layering sorted = subtree_rc(f, c.subsets, &cfg, &ledger);
    EXPECT_EQ(direct, sorted);
    EXPECT_TRUE(validate_strict_h(f, direct));
    EXPECT_GT(ledger.rounds(), 0u);
  }
}

TEST(SubtreeRc, CaterpillarLegsAreFinite) {
  const Forest f = generate(GeneratorKind::kCaterpillar, 200, 3);
  CapacityOverrides o;
  o.subtree_size = 3;
  const MpcConfig cfg = MpcConfig::make(200, 0.5, o);
  const GoodSubsetCollection c = good_subset_collection(f, cfg);
  const Layering l = subtree_rc(f, c.subsets);
  const auto small = subtree_membership(f, cfg.subtree_size);
  std::size_t legs = 0;
  for (NodeId v = 0; v < f.node_count(); ++v) {
    if (!small[v]) continue;
    ++legs;
    EXPECT_TRUE(l.finite(v)) << v;
  }
  EXPECT_GT(legs, 0u);
  EXPECT_TRUE(validate_strict_h(f, l));
}

TEST(StrictHDecomp, PathOfSeven) {
  const Forest f = generate(GeneratorKind::kPath, 7, 0);
  const HDecompResult r = strict_h_decomp(f, MpcConfig::make(7, 0.5));
  EXPECT_TRUE(validate_strict_h(f, r.layering));
  EXPECT_EQ(r.layering.infinite_count(), 0u);
  ASSERT_GE(r.iterations.size(), 1u);
  EXPECT_EQ(r.iterations[0].by_subtree.size() + r.iterations[0].by_peel.size(), 7u);
}

TEST(StrictHDecomp, PerfectBinaryTree) {
  const Forest f = generate(GeneratorKind::kBalancedBinary, 1023, 0);
  const MpcConfig cfg = MpcConfig::make(1023, 0.5);
  const HDecompResult r = strict_h_decomp(f, cfg);
  EXPECT_TRUE(validate_strict_h(f, r.layering));
  EXPECT_EQ(r.layering.infinite_count(), 0u);
  EXPECT_LE(r.layering.max_finite(), layer_bound(cfg, 1023));
  EXPECT_EQ(r.offset, 11u);
}

TEST(StrictHDecomp, SingleNode) {
  const Forest f = build_forest(std::vector<Edge>{}, 1);
  const HDecompResult r = strict_h_decomp(f, MpcConfig::make(1, 0.5));
  ASSERT_EQ(r.iterations.size(), 1u);
  EXPECT_EQ(r.iterations[0].by_subtree, (std::vector<NodeId>{0}));
  EXPECT_TRUE(r.layering.finite(0));
}

TEST(StrictHDecomp, IncompleteWhenOutOfIterations) {
  const Forest f = generate(GeneratorKind::kBalancedBinary, 1023, 0);
  CapacityOverrides o;
  o.hdecomp_iterations = 1;
  o.subtree_size = 1;
  try {
    strict_h_decomp(f, MpcConfig::make(1023, 0.5, o));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIncompleteDecomposition);
  }
}

TEST(StrictHDecomp, CorpusIsStrictAndWithinBound) {
  for (std::size_t n : {1, 2, 5, 64, 500}) {
    for (const Forest& f : corpus(n)) {
      for (double delta : {0.25, 0.5, 0.9}) {
        const MpcConfig cfg = MpcConfig::make(n, delta);
        const HDecompResult r = strict_h_decomp(f, cfg);
        EXPECT_TRUE(validate_strict_h(f, r.layering));
        EXPECT_EQ(r.layering.infinite_count(), 0u);
        EXPECT_LE(r.layering.max_finite(), layer_bound(cfg, n));
      }
    }
  }
}

TEST(StrictHDecomp, EachIterationContainsARakeCompressStep) {
  for (const Forest& f : corpus(400)) {
    const MpcConfig cfg = MpcConfig::make(400, 0.5);
    const HDecompResult r = strict_h_decomp(f, cfg);
    for (const auto& it : r.iterations) {
      const InducedForest sub = induced_subforest(f, it.before);
      const auto must = raked_or_compressed(sub.forest, cfg.subtree_size, 3);
      std::vector<bool> removed(f.node_count(), false);
      for (NodeId v : it.by_subtree) removed[v] = true;
      for (NodeId v : it.by_peel) removed[v] = true;
      for (NodeId v = 0; v < sub.forest.node_count(); ++v) {
        if (must[v]) {
          EXPECT_TRUE(removed[sub.to_parent[v]]) << sub.to_parent[v];
        }
      }
    }
  }
}

TEST(StrictHDecomp, SimulatedModeGivesSameLayering) {
  for (const Forest& f : corpus(300)) {
    const MpcConfig cfg = MpcConfig::make(300, 0.5);
    const HDecompResult a = strict_h_decomp(f, cfg);
    const HDecompResult b = strict_h_decomp(f, cfg, true);
    EXPECT_EQ(a.layering, b.layering);
    EXPECT_EQ(b.ledger.rounds(), b.ledger.charged_total());
    EXPECT_TRUE(b.ledger.violations().empty());
  }
}

TEST(RakeCompress, Examples) {
  for (std::size_t n : {1, 2, 3, 10, 57}) {
    const auto s = generalized_rake_compress_step(generate(GeneratorKind::kPath, n, 0), 1, 1);
    EXPECT_EQ(std::count(s.begin(), s.end(), true), 0) << n;
  }
  const auto star = generalized_rake_compress_step(generate(GeneratorKind::kStar, 10, 0), 1, 3);
  EXPECT_EQ(std::count(star.begin(), star.end(), true), 0);
}

TEST(RakeCompress, SurvivorBound) {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    const Forest f = generate(GeneratorKind::kRandomTree, 20 + seed * 3, seed);
    for (std::size_t x : {1, 2, 4}) {
      for (std::size_t ell : {1, 3}) {
        const auto s = generalized_rake_compress_step(f, x, ell);
        const double left = static_cast<double>(std::count(s.begin(), s.end(), true));
        const double bound =
            static_cast<double>(f.node_count()) / (1.0 + static_cast<double>(x + 1) / (2.0 * ell));
        EXPECT_LE(left, bound) << seed << " " << x << " " << ell;
      }
    }
  }
}

TEST(OptimalSpacePreprocess, Examples) {
  const Forest p = generate(GeneratorKind::kPath, 100, 0);
  const PreprocessResult one = optimal_space_preprocess(p, 1);
  EXPECT_LE(static_cast<double>(one.residual.forest.node_count()), 100.0 / (1.0 + 1.0 / 3.0));
  EXPECT_TRUE(validate_strict_h(p, one.layering));

  const Forest t = generate(GeneratorKind::kRandomTree, 80, 2);
  const PreprocessResult none = optimal_space_preprocess(t, 0);
  EXPECT_EQ(none.layering.infinite_count(), 80u);
  EXPECT_EQ(none.residual.forest.edges(), t.edges());

  const Forest b = generate(GeneratorKind::kBalancedBinary, 1023, 0);
  const PreprocessResult four = optimal_space_preprocess(b, 4);
  EXPECT_LT(four.residual.forest.node_count() * 16, 1023u);
}

TEST(OptimalSpacePreprocess, EachIterationShrinksByTheRakeBound) {
  for (const Forest& f : corpus(300)) {
    std::size_t before = f.node_count();
    for (std::size_t it = 1; it <= 6 && before > 0; ++it) {
      const std::size_t after = optimal_space_preprocess(f, it).residual.forest.node_count();
      EXPECT_LE(static_cast<double>(after), before / (1.0 + 1.0 / 3.0) + 1e-9);
      before = after;
    }
  }
}

TEST(LayeringIo, RoundTrip) {
  const Forest f = generate(GeneratorKind::kRandomTree, 50, 1);
  Layering l = strict_h_decomp(f, MpcConfig::make(50, 0.5)).layering;
  l[3] = I;
  std::stringstream ss;
  write_layering(ss, l);
  EXPECT_EQ(read_layering(ss, 50), l);
  std::istringstream bad("0 1\n0 2\n");
  EXPECT_THROW(read_layering(bad, 2), Error);
}
