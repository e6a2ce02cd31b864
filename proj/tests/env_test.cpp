#include "pomarl/world.hpp"

#include <gtest/gtest.h>

#include "pomarl/masking.hpp"

using namespace pomarl;
using env::AgentState;
using env::JointObservation;
using env::ScenarioSpec;
using env::Vec2;
using env::World;

namespace {

std::vector<AgentState> place(const std::vector<Vec2>& pos) {
  std::vector<AgentState> s(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) s[i].pos = pos[i];
  return s;
}

}  // namespace

TEST(Scenario, RosterAndLayoutLengths) {
  auto nav = env::cooperative_navigation();
  EXPECT_EQ(nav.n_agents, 3);
  EXPECT_EQ(nav.n_landmarks, 3);
  EXPECT_EQ(nav.obs_dim(), 14);  // 2 + 2 + 3*2 + 2*2

  auto dec = env::physical_deception();
  EXPECT_EQ(dec.n_agents, 3);
  EXPECT_EQ(dec.n_landmarks, 2);
  EXPECT_EQ(dec.obs_dim(), 12);
  EXPECT_EQ(dec.adversary_indices, std::vector<int>{0});

  auto tag = env::predator_prey();
  EXPECT_EQ(tag.n_agents, 4);
  EXPECT_EQ(tag.obs_dim(), 20);  // 2 + 2 + 2*2 + 3*2 + 3*2
  EXPECT_GT(tag.agents[3].max_speed, tag.agents[0].max_speed);  // prey is faster

  for (const auto& name : env::scenario_names()) {
    auto spec = env::make_scenario(name);
    int sum = 0;
    for (const auto& f : spec.agent_fields(0)) sum += f.dim;
    EXPECT_EQ(sum, spec.obs_dim());
  }
  EXPECT_THROW(env::make_scenario("nope"), ConfigError);
}

TEST(World, ResetIsSeedDeterministicWithZeroVelocity) {
  World w(env::cooperative_navigation());
  Rng a(42), b(42);
  auto o1 = w.reset(a);
  auto agents1 = w.agents();
  auto o2 = w.reset(b);
  EXPECT_EQ(o1.flat, o2.flat);
  for (const auto& st : w.agents()) {
    EXPECT_DOUBLE_EQ(st.vel.norm(), 0.0);
    EXPECT_LE(std::abs(st.pos.x()), 1.0);
    EXPECT_LE(std::abs(st.pos.y()), 1.0);
  }
  for (std::size_t i = 0; i < agents1.size(); ++i)
    EXPECT_EQ(agents1[i].pos, w.agents()[i].pos);
}

TEST(World, StepIntegratesDampedVelocity) {
  World w(env::cooperative_navigation());
  Rng rng(1);
  w.reset(rng);
  auto agents = w.agents();
  agents[0].pos = Vec2(0.0, 0.0);
  agents[0].vel = Vec2(1.0, 0.0);
  w.set_state(agents, w.landmarks());
  std::vector<Vec2> zero(3, Vec2::Zero());
  w.step(zero);
  EXPECT_NEAR(w.agents()[0].vel.x(), 0.75, 1e-12);
  EXPECT_NEAR(w.agents()[0].vel.y(), 0.0, 1e-12);
  EXPECT_NEAR(w.agents()[0].pos.x(), 0.075, 1e-12);
}

TEST(World, ZeroActionZeroVelocityHoldsPosition) {
  World w(env::physical_deception());
  Rng rng(2);
  w.reset(rng);
  const auto before = w.positions();
  std::vector<Vec2> zero(3, Vec2::Zero());
  w.step(zero);  // deception agents have no contact forces
  const auto after = w.positions();
  for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ((before[i] - after[i]).norm(), 0.0);
}

TEST(World, TrajectoriesAreBitIdenticalAcrossRuns) {
  for (const auto& name : env::scenario_names()) {
    World w1(env::make_scenario(name)), w2(env::make_scenario(name));
    Rng r1(7), r2(7), act(99);
    auto o1 = w1.reset(r1);
    auto o2 = w2.reset(r2);
    std::vector<std::vector<Vec2>> actions;
    for (int t = 0; t < 25; ++t) {
      std::vector<Vec2> a(w1.spec().n_agents);
      for (auto& v : a) v = Vec2(act.uniform(-1, 1), act.uniform(-1, 1));
      actions.push_back(a);
    }
    for (const auto& a : actions) {
      auto [obs1, rew1] = w1.step(a);
      auto [obs2, rew2] = w2.step(a);
      EXPECT_EQ(obs1.flat, obs2.flat);
      EXPECT_EQ(rew1, rew2);
    }
  }
}

TEST(RewardDeception, CooperatorOnGoalBeatsEveryoneFar) {
  World w(env::physical_deception());
  Rng rng(3);
  w.reset(rng);
  std::vector<Vec2> landmarks = {Vec2(0.5, 0.5), Vec2(-0.5, -0.5)};
  // cooperator 1 sits on the goal, adversary far away
  w.set_state(place({Vec2(-1, -1), Vec2(0.5, 0.5), Vec2(0, 0)}), landmarks);
  const double on_goal = reward_physical_deception(w)[1];
  // both cooperators far from the goal, adversary unchanged
  w.set_state(place({Vec2(-1, -1), Vec2(-1, 1), Vec2(1, -1)}), landmarks);
  const double all_far = reward_physical_deception(w)[1];
  EXPECT_GT(on_goal, all_far);
}

TEST(RewardDeception, AdversaryRewardMaximalOnGoal) {
  World w(env::physical_deception());
  Rng rng(4);
  w.reset(rng);
  std::vector<Vec2> landmarks = {Vec2(0.2, -0.3), Vec2(-0.6, 0.4)};
  w.set_state(place({Vec2(0.2, -0.3), Vec2(0, 0), Vec2(0, 0)}), landmarks);
  const double on_goal = reward_physical_deception(w)[0];
  EXPECT_DOUBLE_EQ(on_goal, 0.0);
  Rng pos(5);
  for (int k = 0; k < 50; ++k) {
    w.set_state(place({Vec2(pos.uniform(-1, 1), pos.uniform(-1, 1)), Vec2(0, 0), Vec2(0, 0)}),
                landmarks);
    EXPECT_LE(reward_physical_deception(w)[0], on_goal);
  }
}

TEST(RewardDeception, CooperatorSwapLeavesTeamRewardUnchanged) {
  World w(env::physical_deception());
  Rng rng(6);
  w.reset(rng);
  std::vector<Vec2> landmarks = {Vec2(0.1, 0.8), Vec2(-0.7, -0.2)};
  w.set_state(place({Vec2(0.3, 0.3), Vec2(-0.4, 0.9), Vec2(0.6, -0.5)}), landmarks);
  const auto r1 = reward_physical_deception(w);
  w.set_state(place({Vec2(0.3, 0.3), Vec2(0.6, -0.5), Vec2(-0.4, 0.9)}), landmarks);
  const auto r2 = reward_physical_deception(w);
  EXPECT_DOUBLE_EQ(r1[1] + r1[2], r2[1] + r2[2]);
  EXPECT_DOUBLE_EQ(r1[0], r2[0]);
}

TEST(RewardPredatorPrey, CollisionTermsAreAntisymmetric) {
  World w(env::predator_prey());
  Rng rng(8);
  w.reset(rng);
  std::vector<Vec2> far_landmarks = {Vec2(5, 5), Vec2(-5, -5)};  // out of the way
  // nobody touching: all collision terms zero, prey at center has no
  // boundary penalty
  w.set_state(place({Vec2(-0.8, -0.8), Vec2(0.8, -0.8), Vec2(-0.8, 0.8), Vec2(0, 0)}),
              far_landmarks);
  auto r = reward_predator_prey(w);
  for (double v : r) EXPECT_DOUBLE_EQ(v, 0.0);
  // one predator overlapping the prey: size 0.075 + 0.05 > 0.1 separation
  w.set_state(place({Vec2(0.05, 0), Vec2(0.8, -0.8), Vec2(-0.8, 0.8), Vec2(0, 0)}),
              far_landmarks);
  r = reward_predator_prey(w);
  EXPECT_DOUBLE_EQ(r[0], 10.0);
  EXPECT_DOUBLE_EQ(r[3], -10.0);
}

TEST(RewardPredatorPrey, BoundaryPenaltyHandValues) {
  EXPECT_DOUBLE_EQ(World::boundary_penalty(0.5), 0.0);
  EXPECT_DOUBLE_EQ(World::boundary_penalty(0.89), 0.0);
  EXPECT_NEAR(World::boundary_penalty(0.95), 0.5, 1e-12);
  EXPECT_NEAR(World::boundary_penalty(1.1), std::exp(0.2), 1e-12);
  EXPECT_DOUBLE_EQ(World::boundary_penalty(3.0), 10.0);
}

TEST(RewardCoopNav, OnLandmarksGivesZeroDistanceTerm) {
  World w(env::cooperative_navigation());
  Rng rng(9);
  w.reset(rng);
  std::vector<Vec2> landmarks = {Vec2(0.9, 0.9), Vec2(-0.9, 0.9), Vec2(0.0, -0.9)};
  w.set_state(place(landmarks), landmarks);  // agents exactly on distinct landmarks, apart
  auto r = reward_cooperative_navigation(w);
  for (double v : r) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(RewardCoopNav, SharedAndMatchesBruteForce) {
  World w(env::cooperative_navigation());
  Rng rng(10);
  for (int trial = 0; trial < 2000; ++trial) {
    w.reset(rng);
    auto r = reward_cooperative_navigation(w);
    EXPECT_DOUBLE_EQ(r[0], r[1]);
    EXPECT_DOUBLE_EQ(r[1], r[2]);
    // brute force over all 9 agent-landmark pairs
    double expect = 0.0;
    for (const auto& lm : w.landmarks()) {
      double best = 1e300;
      for (const auto& ag : w.agents()) best = std::min(best, (ag.pos - lm).norm());
      expect -= best;
    }
    int pairs = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = i + 1; j < 3; ++j)
        if ((w.agents()[i].pos - w.agents()[j].pos).norm() < 0.3) ++pairs;
    expect -= 1.0 * pairs;
    EXPECT_NEAR(r[0], expect, 1e-9);
  }
}

TEST(Observe, RelativeEntriesAndOwnState) {
  World w(env::cooperative_navigation());
  Rng rng(11);
  w.reset(rng);
  auto agents = place({Vec2(0.3, 0.4), Vec2(-0.2, 0.1), Vec2(0.5, -0.5)});
  agents[0].vel = Vec2(0.11, -0.07);
  std::vector<Vec2> landmarks = {Vec2(0.3, 0.4), Vec2(-0.8, 0.0), Vec2(0.2, 0.2)};
  w.set_state(agents, landmarks);
  auto o = w.observe();
  const double* v = o.agent(0);
  EXPECT_DOUBLE_EQ(v[0], 0.11);
  EXPECT_DOUBLE_EQ(v[1], -0.07);
  EXPECT_DOUBLE_EQ(v[2], 0.3);
  EXPECT_DOUBLE_EQ(v[3], 0.4);
  EXPECT_DOUBLE_EQ(v[4], 0.0);  // landmark 0 sits exactly on agent 0
  EXPECT_DOUBLE_EQ(v[5], 0.0);
  EXPECT_DOUBLE_EQ(v[10], -0.5);  // agent 1 relative
  EXPECT_DOUBLE_EQ(v[11], -0.3);
}

TEST(Perturb, DisabledAndZeroSettingsAreIdentity) {
  env::DynamicsPerturbation off;
  Rng rng(12);
  Vec2 a(0.4, -0.2);
  EXPECT_EQ(env::perturb_action(a, off, rng), a);
  env::DynamicsPerturbation zero;
  zero.enabled = true;
  World w(env::cooperative_navigation());
  w.reset(rng);
  auto o = w.observe();
  auto po = env::perturb_observation(o, zero, rng);
  EXPECT_EQ(po.flat, o.flat);
  EXPECT_EQ(env::perturb_action(a, zero, rng), a);
}

TEST(Perturb, PureTranslationShiftsExactly) {
  env::DynamicsPerturbation p;
  p.enabled = true;
  p.action_translation = Vec2(0.1, 0.1);
  Rng rng(13);
  Vec2 a(0.25, -0.5);
  Vec2 out = env::perturb_action(a, p, rng);
  EXPECT_DOUBLE_EQ(out.x(), 0.35);
  EXPECT_DOUBLE_EQ(out.y(), -0.4);
}

TEST(Perturb, NoiseMeanMatchesTranslation) {
  env::DynamicsPerturbation p;
  p.enabled = true;
  p.action_noise_scale = 0.05;
  p.action_translation = Vec2(0.02, -0.03);
  Rng rng(14);
  const int n = 10000;
  Vec2 sum = Vec2::Zero();
  for (int i = 0; i < n; ++i) sum += env::perturb_action(Vec2::Zero(), p, rng);
  Vec2 mean = sum / n;
  const double tol = 3.0 * 0.05 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(mean.x(), 0.02, tol);
  EXPECT_NEAR(mean.y(), -0.03, tol);
}

TEST(Perturb, DrawnPerturbationHasDeclaredShape) {
  Rng rng(15);
  auto spec = env::predator_prey();
  auto p = env::draw_perturbation(spec, 0.05, 0.05, 0.1, rng);
  EXPECT_TRUE(p.enabled);
  EXPECT_EQ(static_cast<int>(p.obs_translation.size()), spec.joint_dim());
  EXPECT_LE(std::abs(p.action_translation.x()), 0.1);
  for (double t : p.obs_translation) EXPECT_LE(std::abs(t), 0.1);
}
