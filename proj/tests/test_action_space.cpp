#include <gtest/gtest.h>

#include <algorithm>

#include "gridenv/action_space.hpp"
#include "gridenv/error.hpp"
#include "support.hpp"

using namespace gridenv;
using testing_support::bus14;

namespace {

// Catalog with a deterministic pseudo-ranking (reverse canonical order after
// the no-op).
ActionCatalog fake_ranked(const Grid& g) {
  ActionCatalog c = enumerate_topology_actions(g);
  std::reverse(c.entries.begin() + 1, c.entries.end());
  for (int i = 0; i < c.size(); ++i) {
    c.entries[i].samples = 1;
    c.entries[i].survival = 1.0 - i * 1e-3;
  }
  return c;
}

}  // namespace

TEST(Catalog, Bus14FullSize) {
  const Grid g = bus14();
  const ActionCatalog c = enumerate_topology_actions(g);
  std::uint64_t splits = 0;
  for (int s = 0; s < g.n_subs(); ++s) splits += bus_split_count(g.sub_size(s));
  EXPECT_EQ(c.size(), 1 + g.n_lines() + static_cast<int>(splits));
  EXPECT_EQ(c.size(), 209);
  EXPECT_TRUE(is_noop(c.entries[0].action));
  int sub5 = 0;
  for (const auto& e : c.entries) {
    if (const auto* s = std::get_if<SubstationSet>(&e.action)) sub5 += s->sub == 5;
  }
  EXPECT_EQ(sub5, 63);
  for (int i = 0; i < c.size(); ++i) EXPECT_EQ(c.entries[i].canonical_index, i);
}

TEST(Catalog, SingleSubstationTwoElements) {
  const Grid g = parse_grid(
      "format_version = 1\nname = one\n[substations]\n0\n[lines]\n"
      "[generators]\n0 0 fossil 0 10 1 1\n[loads]\n0 0 5\n");
  const ActionCatalog c = enumerate_topology_actions(g);
  EXPECT_EQ(c.size(), 1 + 0 + 1);
}

TEST(Catalog, EncodeDecodeRoundTrip) {
  const ActionCatalog c = enumerate_topology_actions(bus14());
  for (const auto& e : c.entries) EXPECT_EQ(decode_action(encode_action(e.action)), e.action);
  EXPECT_EQ(encode_action(NoOp{}), "noop");
  EXPECT_EQ(encode_action(LineToggle{4}), "line:4");
  EXPECT_EQ(decode_action("sub:5:1121122"), Action(SubstationSet{5, {1, 1, 2, 1, 1, 2, 2}}));
  const Action cont = ContinuousAction{{0.5, -1.25}};
  EXPECT_EQ(decode_action(encode_action(cont)), cont);
  EXPECT_ANY_THROW(decode_action("jump:3"));
  EXPECT_ANY_THROW(decode_action("sub:5:12x"));
}

TEST(DifficultyLevels, Bus14Sizes) {
  const Grid g = bus14();
  const auto sizes = difficulty_sizes(g);
  ASSERT_EQ(sizes, (std::vector<int>{50, 209}));
  const ActionCatalog ranked = fake_ranked(g);
  EXPECT_EQ(build_difficulty_level(ranked, sizes, 0).size(), 50);
  EXPECT_EQ(build_difficulty_level(ranked, sizes, 1).size(), 209);
  EXPECT_THROW(build_difficulty_level(ranked, sizes, 2), std::out_of_range);
  ActionCatalog small = ranked;
  small.entries.resize(40);
  EXPECT_THROW(build_difficulty_level(small, sizes, 0), std::invalid_argument);
}

TEST(DifficultyLevels, KnownTable) {
  EXPECT_EQ(known_difficulty_sizes("bus36-M").back(), 66978);
  EXPECT_EQ(known_difficulty_sizes("bus118-MOB-v1"),
            (std::vector<int>{50, 309, 1915, 11852, 73357}));
  EXPECT_TRUE(known_difficulty_sizes("nowhere").empty());
}

TEST(DifficultyLevels, NestedAndNoOpFirst) {
  const Grid g = bus14();
  const auto sizes = difficulty_sizes(g);
  const ActionCatalog ranked = fake_ranked(g);
  for (std::size_t lv = 0; lv + 1 < sizes.size(); ++lv) {
    const ActionSpace lo = build_difficulty_level(ranked, sizes, lv);
    const ActionSpace hi = build_difficulty_level(ranked, sizes, lv + 1);
    EXPECT_TRUE(is_noop(lo[0]));
    for (int i = 0; i < lo.size(); ++i) EXPECT_EQ(lo[i], hi[i]);
  }
}

TEST(DifficultyLevels, NoOpMovedToFrontWhenRankedLower) {
  const Grid g = bus14();
  ActionCatalog ranked = fake_ranked(g);
  std::rotate(ranked.entries.begin(), ranked.entries.begin() + 1, ranked.entries.begin() + 10);
  const ActionSpace lo = build_difficulty_level(ranked, {50, 209}, 0);
  EXPECT_TRUE(is_noop(lo[0]));
  EXPECT_EQ(lo.size(), 50);
  for (int i = 1; i < lo.size(); ++i) EXPECT_FALSE(is_noop(lo[i]));
}

TEST(Ranking, ArtifactRoundTrip) {
  const Grid g = bus14();
  const ActionCatalog ranked = fake_ranked(g);
  const auto dir = testing_support::scratch("ranking_roundtrip");
  write_ranking(dir / "r.json", ranked, {7, 2, 100, 418, "fixed"});
  const ActionCatalog back = read_ranking(dir / "r.json", g);
  ASSERT_EQ(back.size(), ranked.size());
  for (int i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back.entries[i].action, ranked.entries[i].action);
    EXPECT_EQ(back.entries[i].canonical_index, ranked.entries[i].canonical_index);
    EXPECT_EQ(back.entries[i].survival, ranked.entries[i].survival);
  }
}

TEST(Ranking, ShippedArtifactBuildsBothLevels) {
  const Grid g = bus14();
  const ActionCatalog ranked = read_ranking(testing_support::data("rankings/bus14.json"), g);
  EXPECT_EQ(ranked.size(), 209);
  EXPECT_EQ(build_difficulty_level(ranked, difficulty_sizes(g), 0).size(), 50);
  EXPECT_EQ(build_difficulty_level(ranked, difficulty_sizes(g), 1).size(), 209);
}

TEST(ContinuousSpace, Bus14Dimension) {
  const ContinuousBounds b = continuous_bounds(bus14());
  EXPECT_EQ(b.dim(), 6);
  for (int i = 0; i < b.dim(); ++i) EXPECT_LT(b.lower[i], b.upper[i]);
}
