#include "pomarl/masking.hpp"

#include <gtest/gtest.h>

using namespace pomarl;
using env::BinaryMask;
using env::ScenarioSpec;
using env::Vec2;
using env::World;

TEST(MaskByDistance, InRangePairStaysFullyVisible) {
  auto spec = env::physical_deception();
  World w(spec);
  Rng rng(1);
  w.reset(rng);
  auto agents = w.agents();
  agents[0].pos = Vec2(0, 0);
  agents[1].pos = Vec2(0.5, 0);
  agents[2].pos = Vec2(0.25, 0.2);
  w.set_state(agents, w.landmarks());
  auto masked = env::mask_by_distance(w.observe(), w.positions(), spec, 1.0, rng);
  for (double m : masked.mask) EXPECT_EQ(m, 1.0);
  EXPECT_EQ(masked.partial.flat, w.observe().flat);
  EXPECT_TRUE(masked.graph.visible(0, 1));
}

TEST(MaskByDistance, OutOfRangeMasksBothDirections) {
  auto spec = env::physical_deception();
  World w(spec);
  Rng rng(2);
  w.reset(rng);
  auto agents = w.agents();
  agents[0].pos = Vec2(0, 0);
  agents[1].pos = Vec2(1.5, 0);
  agents[2].pos = Vec2(0.1, 0.1);
  w.set_state(agents, w.landmarks());
  auto full = w.observe();
  auto masked = env::mask_by_distance(full, w.positions(), spec, 1.0, rng);
  EXPECT_FALSE(masked.graph.visible(0, 1));
  EXPECT_TRUE(masked.graph.visible(0, 2));
  for (int idx : spec.reference_slice(0, 1)) {
    EXPECT_EQ(masked.mask[idx], 0.0);
    EXPECT_NE(masked.partial.flat[idx], full.flat[idx]);
  }
  for (int idx : spec.reference_slice(1, 0)) EXPECT_EQ(masked.mask[idx], 0.0);
  // own state, landmarks, and the in-range pair keep exact values
  for (int idx : spec.reference_slice(0, 2)) {
    EXPECT_EQ(masked.mask[idx], 1.0);
    EXPECT_EQ(masked.partial.flat[idx], full.flat[idx]);
  }
  for (int k = 0; k < 8; ++k) {  // own_vel, own_pos, landmark entries of agent 1
    const int idx = spec.agent_block_offset(1) + k;
    EXPECT_EQ(masked.mask[idx], 1.0);
  }
}

TEST(MaskByDistance, DiagonalOfSquareNeverMasks) {
  auto spec = env::predator_prey();
  World w(spec);
  Rng rng(3);
  const double never = 2.0 * std::sqrt(2.0);
  for (int trial = 0; trial < 200; ++trial) {
    w.reset(rng);
    auto masked = env::mask_by_distance(w.observe(), w.positions(), spec, never, rng);
    for (double m : masked.mask) EXPECT_EQ(m, 1.0);
  }
}

TEST(MaskByDistance, SymmetryAndExactPartialProperty) {
  auto spec = env::predator_prey();
  World w(spec);
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    w.reset(rng);
    auto full = w.observe();
    auto masked = env::mask_by_distance(full, w.positions(), spec, 1.0, rng);
    const auto pos = w.positions();
    for (int i = 0; i < spec.n_agents; ++i) {
      for (int j = 0; j < spec.n_agents; ++j) {
        if (i == j) continue;
        const bool in_range = (pos[i] - pos[j]).norm() <= 1.0;
        EXPECT_EQ(masked.graph.visible(i, j), in_range);
        for (int idx : spec.reference_slice(i, j))
          EXPECT_EQ(masked.mask[idx], in_range ? 1.0 : 0.0);
      }
    }
    // unmasked entries match the full observation exactly; masked are noise
    for (std::size_t k = 0; k < masked.mask.size(); ++k)
      if (masked.mask[k] == 1.0) EXPECT_EQ(masked.partial.flat[k], full.flat[k]);
  }
}

TEST(MaskByDistance, ZeroRangeIsolatesEveryone) {
  auto spec = env::cooperative_navigation();
  World w(spec);
  Rng rng(5);
  w.reset(rng);
  auto masked = env::mask_by_distance(w.observe(), w.positions(), spec, 0.0, rng);
  auto comp = masked.graph.components();
  EXPECT_NE(comp[0], comp[1]);
  EXPECT_NE(comp[1], comp[2]);
  EXPECT_NE(comp[0], comp[2]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j)
        for (int idx : spec.reference_slice(i, j)) EXPECT_EQ(masked.mask[idx], 0.0);
}

TEST(VisibilityGraph, ChainMakesOneComponent) {
  env::VisibilityGraph g;
  g.n = 4;
  g.adj.assign(16, 0);
  auto link = [&](int a, int b) {
    g.adj[a * 4 + b] = 1;
    g.adj[b * 4 + a] = 1;
  };
  for (int i = 0; i < 4; ++i) g.adj[i * 4 + i] = 1;
  link(0, 1);
  link(1, 2);  // 3 isolated
  auto comp = g.components();
  EXPECT_EQ(comp[0], comp[1]);
  EXPECT_EQ(comp[1], comp[2]);
  EXPECT_NE(comp[3], comp[0]);
}

TEST(MaskedFraction, CountsZeros) {
  BinaryMask m = {1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(env::masked_fraction(m), 0.5);
}
