#include <gtest/gtest.h>

#include <set>

#include "treempc/oracle.hpp"

using namespace treempc;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kIoError;
}

// connected induced subsets, counted by a different route: a mask is
// connected when a search from its lowest member stays inside and hits all
std::size_t count_connected(const Forest& f) {
  const std::size_t n = f.node_count();
  std::size_t count = 0;
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<bool> blocked(n);
    NodeId first = 0;
    while (!(mask >> first & 1u)) ++first;
    for (NodeId v = 0; v < n; ++v) blocked[v] = !(mask >> v & 1u);
    count += oracle::reach(f, first, blocked).size() ==
             static_cast<std::size_t>(__builtin_popcount(mask));
  }
  return count;
}

}  // namespace

TEST(PeelOracle, Examples) {
  const Forest p7 = generate(GeneratorKind::kPath, 7, 0);
  EXPECT_EQ(oracle::peel_oracle(p7), Layering(7, 1));

  const Forest b = generate(GeneratorKind::kBalancedBinary, 15, 0);
  const Layering lb = oracle::peel_oracle(b);
  EXPECT_TRUE(validate_partial_h(b, lb));
  EXPECT_LE(lb.max_finite(), 4u);

  const Forest star = generate(GeneratorKind::kStar, 9, 0);
  const Layering ls = oracle::peel_oracle(star);
  EXPECT_EQ(ls[0], 2u);
  for (NodeId v = 1; v < 9; ++v) EXPECT_EQ(ls[v], 1u);
}

TEST(PeelOracle, ValidAndLogarithmicOnCorpus) {
  for (auto kind : {GeneratorKind::kPath, GeneratorKind::kStar, GeneratorKind::kCaterpillar,
                    GeneratorKind::kBalancedBinary, GeneratorKind::kRandomTree,
                    GeneratorKind::kRandomForest}) {
    for (std::size_t n : {1, 5, 100, 2000}) {
      const Forest f = generate(kind, n, n);
      const Layering l = oracle::peel_oracle(f);
      EXPECT_TRUE(validate_partial_h(f, l));
      EXPECT_EQ(l.infinite_count(), 0u);
      std::size_t log_n = 0;
      while ((std::size_t{1} << log_n) < n) ++log_n;
      EXPECT_LE(l.max_finite(), log_n + 1);
    }
  }
}

TEST(GreedyTreeColor, Examples) {
  const Forest p5 = generate(GeneratorKind::kPath, 5, 0);
  EXPECT_EQ(oracle::greedy_tree_color(p5), (std::vector<std::uint32_t>{1, 2, 1, 2, 1}));
  const Forest star = generate(GeneratorKind::kStar, 5, 0);
  EXPECT_EQ(oracle::greedy_tree_color(star), (std::vector<std::uint32_t>{1, 2, 2, 2, 2}));
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Forest f = generate(GeneratorKind::kRandomForest, 90, seed);
    const auto c = oracle::greedy_tree_color(f);
    for (const Edge& e : f.edges()) EXPECT_NE(c[e.u], c[e.v]);
  }
}

TEST(Enumerate, PathOfTwoHasThreeConnectedSets) {
  const Forest p2 = generate(GeneratorKind::kPath, 2, 0);
  EXPECT_EQ(oracle::enumerate_connected(p2).size(), 3u);
}

TEST(Enumerate, FrozenSubtreeCountOnPathOfFour) {
  // only end pieces qualify: {0}, {3}, {0,1}, {2,3}
  const Forest p4 = generate(GeneratorKind::kPath, 4, 0);
  const auto s = oracle::enumerate_subtrees(p4, 2);
  EXPECT_EQ(s.size(), 4u);
  const std::set<std::vector<NodeId>> got(s.begin(), s.end());
  const std::set<std::vector<NodeId>> expect{{0}, {3}, {0, 1}, {2, 3}};
  EXPECT_EQ(got, expect);
}

TEST(Enumerate, LayeringsIncludeAllInfinity) {
  for (std::size_t n = 0; n <= 6; ++n) {
    const auto ls = oracle::enumerate_layerings(n);
    std::size_t expect = 1;
    for (std::size_t i = 0; i < n; ++i) expect *= 3;
    EXPECT_EQ(ls.size(), expect);
    EXPECT_NE(std::find(ls.begin(), ls.end(), Layering(n)), ls.end());
    std::set<std::vector<Layer>> distinct;
    for (const auto& l : ls) distinct.insert(l.values());
    EXPECT_EQ(distinct.size(), expect);
  }
}

TEST(Enumerate, SubsetCountsAndDistinctness) {
  for (std::size_t n = 0; n <= 10; ++n) {
    const auto s = oracle::enumerate_subsets(n);
    EXPECT_EQ(s.size(), std::size_t{1} << n);
    EXPECT_EQ(std::set<std::vector<NodeId>>(s.begin(), s.end()).size(), s.size());
  }
}

TEST(Enumerate, ConnectedCountsMatchARecount) {
  for (std::size_t n = 1; n <= 10; ++n) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      const Forest f = generate(seed % 2 ? GeneratorKind::kRandomTree : GeneratorKind::kRandomForest, n, seed);
      EXPECT_EQ(oracle::enumerate_connected(f).size(), count_connected(f)) << n << " " << seed;
    }
  }
  // a path of n has n(n+1)/2 intervals
  EXPECT_EQ(oracle::enumerate_connected(generate(GeneratorKind::kPath, 9, 0)).size(), 45u);
}

TEST(Enumerate, SubtreesAreConnectedAndOnlyCutOneBranch) {
  const Forest f = generate(GeneratorKind::kRandomTree, 9, 3);
  for (const auto& t : oracle::enumerate_subtrees(f, 9)) {
    const auto mask = oracle::as_mask(9, t);
    std::vector<bool> outside(9);
    for (NodeId v = 0; v < 9; ++v) outside[v] = !mask[v];
    EXPECT_EQ(oracle::reach(f, t.front(), outside).size(), t.size());
    std::size_t boundary = 0;
    for (const Edge& e : f.edges()) boundary += mask[e.u] != mask[e.v];
    EXPECT_LE(boundary, 1u);
  }
}

TEST(Enumerate, SizeLimit) {
  EXPECT_EQ(code_of([] { oracle::enumerate_subsets(13); }), ErrorCode::kSizeLimit);
  EXPECT_EQ(code_of([] { oracle::enumerate_layerings(13); }), ErrorCode::kSizeLimit);
  EXPECT_EQ(code_of([] { oracle::all_trees(13); }), ErrorCode::kSizeLimit);
}

TEST(AllTrees, UnlabeledCounts) {
  const std::vector<std::size_t> expect{0, 1, 1, 1, 2, 3, 6, 11, 23, 47, 106, 235, 551};
  for (std::size_t n = 0; n <= 12; ++n) {
    const auto ts = oracle::all_trees(n);
    EXPECT_EQ(ts.size(), expect[n]) << n;
    for (const Forest& t : ts) {
      EXPECT_EQ(t.node_count(), n);
      EXPECT_EQ(t.component_count(), 1u);
    }
  }
}

TEST(ConservativePeelingOracle, Examples) {
  const Forest star = generate(GeneratorKind::kStar, 5, 0);
  const std::vector<bool> all(5, true);
  const Layering l = oracle::conservative_peeling_oracle(star, all);
  EXPECT_EQ(l, Layering(std::vector<Layer>{2, 1, 1, 1, 1}));
  std::vector<bool> center_only(5, false);
  center_only[0] = true;
  EXPECT_EQ(oracle::conservative_peeling_oracle(star, center_only)[0], kInfinity);
  for (NodeId v = 1; v < 5; ++v) EXPECT_EQ(oracle::conservative_peeling_oracle(star, center_only)[v], kInfinity);
}

TEST(GoodSubsetOracle, Examples) {
  const Forest p9 = generate(GeneratorKind::kPath, 9, 0);
  std::vector<bool> all(9, true);
  EXPECT_TRUE(oracle::is_good_subset(p9, all, 4));
  std::vector<bool> none(9, false);
  EXPECT_FALSE(oracle::is_good_subset(p9, none, 4));
  // dropping both neighbors of the center
  std::vector<bool> lone(9, false);
  lone[4] = true;
  EXPECT_FALSE(oracle::is_good_subset(p9, lone, 4));
  // one neighbor missing, but the other side is cut right after the center's
  // neighbor
  std::vector<bool> short_side(9, false);
  short_side[4] = short_side[5] = true;
  EXPECT_FALSE(oracle::is_good_subset(p9, short_side, 4));
}

TEST(DirectionBall, Examples) {
  const Forest p6 = generate(GeneratorKind::kPath, 6, 0);
  EXPECT_EQ(oracle::direction_ball(p6, 2, 3, 2), (std::vector<NodeId>{3, 4}));
  EXPECT_EQ(oracle::direction_ball(p6, 2, 1, 5), (std::vector<NodeId>{0, 1}));
  EXPECT_TRUE(oracle::direction_ball(p6, 2, 3, 0).empty());
}
