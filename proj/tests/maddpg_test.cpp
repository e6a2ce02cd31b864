#include "pomarl/maddpg.hpp"

#include <gtest/gtest.h>

#include "pomarl/ccwgan.hpp"
#include "pomarl/ddpg.hpp"
#include "pomarl/infer_obs.hpp"
#include "pomarl/masking.hpp"
#include "pomarl/world.hpp"
#include "test_util.hpp"

using namespace pomarl;
using env::Vec2;
using nn::Gradient;
using nn::Mat;
using nn::Vec;
using rl::Batch;
using rl::Maddpg;
using rl::MarlConfig;
using rl::RlReplayBuffer;
using rl::Transition;
using test::make_linear_mlp;
using test::random_mat;

namespace {

MarlConfig small_config() {
  MarlConfig cfg;
  cfg.hidden = 8;
  cfg.batch_size = 16;
  cfg.buffer_capacity = 10000;
  return cfg;
}

// Random transitions with in-range actions.
void fill_buffer(RlReplayBuffer& buf, const env::ScenarioSpec& spec, int count, Rng& rng) {
  for (int t = 0; t < count; ++t) {
    Transition tr;
    tr.obs.resize(spec.joint_dim());
    tr.next_obs.resize(spec.joint_dim());
    for (double& v : tr.obs) v = rng.gaussian();
    for (double& v : tr.next_obs) v = rng.gaussian();
    tr.actions.resize(2 * spec.n_agents);
    for (double& a : tr.actions) a = rng.uniform(-1, 1);
    tr.rewards.resize(spec.n_agents);
    for (double& r : tr.rewards) r = rng.gaussian();
    tr.mask.assign(spec.joint_dim(), 1.0);
    tr.next_mask.assign(spec.joint_dim(), 1.0);
    buf.push(tr);
  }
}

Batch<double> random_batch(const env::ScenarioSpec& spec, int b, Rng& rng) {
  Batch<double> batch;
  batch.obs = random_mat(b, spec.joint_dim(), rng);
  batch.next_obs = random_mat(b, spec.joint_dim(), rng);
  batch.actions = random_mat(b, 2 * spec.n_agents, rng, 0.4);
  batch.rewards = random_mat(b, spec.n_agents, rng);
  return batch;
}

}  // namespace

TEST(ComputeReturn, HandValues) {
  EXPECT_NEAR(rl::compute_return({1, 1, 1}, 0.95), 2.8525, 1e-12);
  EXPECT_DOUBLE_EQ(rl::compute_return({3, 7, 9}, 0.0), 3.0);
  EXPECT_DOUBLE_EQ(rl::compute_return({}, 0.9), 0.0);
}

TEST(ReplayBuffer, RejectsOutOfRangeActionsAndWraps) {
  RlReplayBuffer buf(2, 4, 3);
  Transition t;
  t.obs = {1, 2, 3, 4};
  t.next_obs = {1, 2, 3, 4};
  t.actions = {0.5, -0.5, 1.5, 0.0};  // out of range
  t.rewards = {0, 0};
  t.mask.assign(4, 1.0);
  t.next_mask.assign(4, 1.0);
  EXPECT_THROW(buf.push(t), ContractError);
  t.actions[2] = 1.0;
  for (int i = 0; i < 5; ++i) {
    t.rewards[0] = i;
    buf.push(t);
  }
  EXPECT_EQ(buf.size(), 3u);
}

TEST(SelectAction, DeterministicWithoutExplorationAndAlwaysClamped) {
  auto spec = env::cooperative_navigation();
  Rng init(1);
  Maddpg<double> algo(spec, small_config(), init);
  Rng rng(2);
  std::vector<double> obs(spec.obs_dim());
  for (double& v : obs) v = rng.gaussian();
  auto a1 = algo.select_action(0, obs, 0.0, rng);
  auto a2 = algo.select_action(0, obs, 0.0, rng);
  EXPECT_EQ(a1, a2);
  for (int k = 0; k < 200; ++k) {
    auto a = algo.select_action(1, obs, 0.8, rng);
    EXPECT_GE(a.first, -1.0);
    EXPECT_LE(a.first, 1.0);
    EXPECT_GE(a.second, -1.0);
    EXPECT_LE(a.second, 1.0);
  }
}

TEST(SelectAction, ZeroPolicyZeroSigmaGivesZeroAction) {
  auto spec = env::cooperative_navigation();
  Rng init(3);
  Maddpg<double> algo(spec, small_config(), init);
  auto& pol = algo.agent(0).policy;
  for (int l = 0; l < 3; ++l) {
    pol.weight(l).setZero();
    pol.bias(l).setZero();
  }
  pol.bump_version();
  Rng rng(4);
  std::vector<double> obs(spec.obs_dim(), 0.3);
  auto a = algo.select_action(0, obs, 0.0, rng);
  EXPECT_DOUBLE_EQ(a.first, 0.0);
  EXPECT_DOUBLE_EQ(a.second, 0.0);
}

TEST(CriticLoss, ZeroNetsUnitRewardGivesUnitLoss) {
  auto spec = env::cooperative_navigation();
  Rng init(5);
  Maddpg<double> algo(spec, small_config(), init);
  auto& ag = algo.agent(0);
  for (auto* net : {&ag.critic, &ag.target_critic}) {
    for (int l = 0; l < 3; ++l) {
      net->weight(l).setZero();
      net->bias(l).setZero();
    }
    net->bump_version();
  }
  Rng rng(6);
  auto batch = random_batch(spec, 8, rng);
  batch.rewards.setOnes();
  // Q == 0 everywhere, so y = r = 1 and the loss is (0 - 1)^2 = 1.
  EXPECT_NEAR(algo.critic_loss(0, batch, nullptr), 1.0, 1e-12);
}

TEST(CriticLoss, GammaZeroTargetsAreRewards) {
  auto spec = env::physical_deception();
  auto cfg = small_config();
  cfg.gamma = 0.0;
  Rng init(7);
  Maddpg<double> algo(spec, cfg, init);
  auto& ag = algo.agent(1);
  for (int l = 0; l < 3; ++l) {
    ag.critic.weight(l).setZero();
    ag.critic.bias(l).setZero();
  }
  ag.critic.bump_version();
  Rng rng(8);
  auto batch = random_batch(spec, 6, rng);
  double expect = 0.0;
  for (int b = 0; b < 6; ++b) expect += batch.rewards(b, 1) * batch.rewards(b, 1);
  EXPECT_NEAR(algo.critic_loss(1, batch, nullptr), expect / 6.0, 1e-12);
}

TEST(CriticLoss, GradientMatchesFiniteDifferences) {
  auto spec = env::physical_deception();
  for (int trial = 0; trial < 3; ++trial) {
    Rng init(10 + trial);
    Maddpg<double> algo(spec, small_config(), init);
    Rng rng(20 + trial);
    test::randomize_biases(algo.agent(0).critic, rng);
    auto batch = random_batch(spec, 5, rng);
    Gradient<double> g = algo.agent(0).critic.zero_gradient();
    algo.critic_loss(0, batch, &g);
    auto eval = [&]() { return algo.critic_loss(0, batch, nullptr); };
    EXPECT_LT(test::fd_check(algo.agent(0).critic, g, eval), 1e-4);
  }
}

TEST(PolicyObjective, ConstantCriticGivesZeroGradient) {
  auto spec = env::cooperative_navigation();
  Rng init(30);
  Maddpg<double> algo(spec, small_config(), init);
  auto& ag = algo.agent(2);
  for (int l = 0; l < 3; ++l) {
    ag.critic.weight(l).setZero();
    ag.critic.bias(l).setZero();
  }
  ag.critic.bias(2)(0) = 5.0;
  ag.critic.bump_version();
  Rng rng(31);
  auto batch = random_batch(spec, 7, rng);
  Gradient<double> g = ag.policy.zero_gradient();
  EXPECT_NEAR(algo.policy_objective(2, batch, &g), 5.0, 1e-12);
  for (int l = 0; l < 3; ++l) {
    EXPECT_DOUBLE_EQ(g.w[l].cwiseAbs().maxCoeff(), 0.0);
    EXPECT_DOUBLE_EQ(g.b[l].cwiseAbs().maxCoeff(), 0.0);
  }
}

// With Q(o, a) = a_i.x the chain rule collapses: the policy gradient is the
// gradient of the policy's own first output coordinate.
TEST(PolicyObjective, LinearCriticSelectsPolicyCoordinate) {
  auto spec = env::cooperative_navigation();
  Rng init(32);
  Maddpg<double> algo(spec, small_config(), init);
  const int i = 1;
  const int critic_in = spec.joint_dim() + 2 * spec.n_agents;
  Mat<double> v = Mat<double>::Zero(1, critic_in);
  v(0, spec.joint_dim() + 2 * i) = 1.0;  // select a_i.x
  Rng wrng(33);
  algo.agent(i).critic = make_linear_mlp<double>(v, Vec<double>::Zero(1), wrng);
  Rng rng(34);
  auto batch = random_batch(spec, 6, rng);
  Gradient<double> via_chain = algo.agent(i).policy.zero_gradient();
  algo.policy_objective(i, batch, &via_chain);
  // direct: mean of the policy's x-output over the batch
  nn::Tape<double> tape;
  algo.agent(i).policy.forward(algo.agent_obs(batch.obs, i), tape);
  Mat<double> cot = Mat<double>::Zero(6, 2);
  cot.col(0).setConstant(-1.0 / 6.0);  // chain grads carry the descend sign
  Gradient<double> direct = algo.agent(i).policy.zero_gradient();
  algo.agent(i).policy.backward(tape, cot, direct);
  for (int l = 0; l < 3; ++l) {
    EXPECT_LT((via_chain.w[l] - direct.w[l]).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((via_chain.b[l] - direct.b[l]).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(PolicyObjective, FullChainGradientMatchesFiniteDifferences) {
  auto spec = env::physical_deception();
  for (int trial = 0; trial < 3; ++trial) {
    Rng init(40 + trial);
    Maddpg<double> algo(spec, small_config(), init);
    Rng rng(50 + trial);
    test::randomize_biases(algo.agent(1).policy, rng);
    test::randomize_biases(algo.agent(1).critic, rng);
    auto batch = random_batch(spec, 5, rng);
    Gradient<double> g = algo.agent(1).policy.zero_gradient();
    algo.policy_objective(1, batch, &g);
    g *= -1.0;  // stored grads descend -J
    auto eval = [&]() { return algo.policy_objective(1, batch, nullptr); };
    EXPECT_LT(test::fd_check(algo.agent(1).policy, g, eval), 1e-4);
  }
}

TEST(ApproxLoss, AtModeLossIsEntropyAdjustedNormalizer) {
  auto spec = env::cooperative_navigation();
  auto cfg = small_config();
  Rng init(60);
  Maddpg<double> algo(spec, cfg, init);
  Rng rng(61);
  auto batch = random_batch(spec, 4, rng);
  // put the observed actions exactly at the predicted means
  const int i = 0, j = 2;
  Mat<double> mean =
      algo.agent(i).approx[Maddpg<double>::approx_slot(i, j)].forward(
          algo.agent_obs(batch.obs, j));
  batch.actions.middleCols(2 * j, 2) = mean;
  const double sigma = std::exp(cfg.approx_log_std);
  const double log_norm = std::log(sigma * std::sqrt(2.0 * std::numbers::pi));
  const double entropy = 2.0 * (cfg.approx_log_std + 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e));
  const double expect = 2.0 * log_norm - cfg.entropy_weight * entropy;
  EXPECT_NEAR(algo.approx_loss(i, j, batch, nullptr), expect, 1e-12);
  EXPECT_DOUBLE_EQ(cfg.entropy_weight, 0.001);
}

TEST(ApproxLoss, GradientMatchesFiniteDifferences) {
  auto spec = env::physical_deception();
  for (int trial = 0; trial < 3; ++trial) {
    Rng init(70 + trial);
    Maddpg<double> algo(spec, small_config(), init);
    Rng rng(80 + trial);
    auto& net = algo.agent(0).approx[Maddpg<double>::approx_slot(0, 2)];
    test::randomize_biases(net, rng);
    auto batch = random_batch(spec, 5, rng);
    Gradient<double> g = net.zero_gradient();
    algo.approx_loss(0, 2, batch, &g);
    auto eval = [&]() { return algo.approx_loss(0, 2, batch, nullptr); };
    EXPECT_LT(test::fd_check(net, g, eval), 1e-4);
  }
}

TEST(MaddpgUpdate, NoOpUntilBatchAvailableThenDeterministic) {
  auto spec = env::cooperative_navigation();
  auto cfg = small_config();
  Rng init(90);
  Maddpg<double> algo(spec, cfg, init);
  RlReplayBuffer buf(spec.n_agents, spec.joint_dim(), cfg.buffer_capacity);
  Rng rng(91);
  auto m0 = algo.update(buf, rng);
  EXPECT_FALSE(m0.updated);
  fill_buffer(buf, spec, 64, rng);

  Rng init2(90);
  Maddpg<double> twin(spec, cfg, init2);
  Rng ra(92), rb(92);
  auto ma = algo.update(buf, ra);
  auto mb = twin.update(buf, rb);
  EXPECT_TRUE(ma.updated);
  EXPECT_DOUBLE_EQ(ma.critic_loss, mb.critic_loss);
  EXPECT_DOUBLE_EQ(ma.policy_objective, mb.policy_objective);
  EXPECT_DOUBLE_EQ(ma.approx_loss, mb.approx_loss);
}

TEST(MaddpgUpdate, TargetsOnlyMoveThroughPolyak) {
  auto spec = env::cooperative_navigation();
  auto cfg = small_config();
  Rng init(93);
  Maddpg<double> algo(spec, cfg, init);
  RlReplayBuffer buf(spec.n_agents, spec.joint_dim(), cfg.buffer_capacity);
  Rng rng(94);
  fill_buffer(buf, spec, 64, rng);
  const Mat<double> before = algo.agent(0).target_policy.weight(0);
  algo.update(buf, rng);
  // target adam state untouched; parameters interpolated toward online
  EXPECT_EQ(algo.agent(0).target_policy.adam().t, 0);
  EXPECT_EQ(algo.agent(0).target_critic.adam().t, 0);
  EXPECT_GT(algo.agent(0).policy.adam().t, 0);
  const Mat<double> after = algo.agent(0).target_policy.weight(0);
  const Mat<double> online = algo.agent(0).policy.weight(0);
  const Mat<double> expect = (1.0 - cfg.tau) * before + cfg.tau * online;
  EXPECT_LT((after - expect).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Ddpg, CriticInputIsOwnObservationPlusOwnAction) {
  auto spec = env::predator_prey();
  Rng init(95);
  rl::Ddpg<double> algo(spec, small_config(), init);
  EXPECT_EQ(algo.agent(0).critic.in_dim(), spec.obs_dim() + 2);
  Rng init2(95);
  Maddpg<double> central(spec, small_config(), init2);
  EXPECT_EQ(central.agent(0).critic.in_dim(), spec.joint_dim() + 2 * spec.n_agents);
}

TEST(Ddpg, GradientsMatchFiniteDifferences) {
  auto spec = env::cooperative_navigation();
  Rng init(96);
  rl::Ddpg<double> algo(spec, small_config(), init);
  Rng rng(97);
  test::randomize_biases(algo.agent(0).critic, rng);
  test::randomize_biases(algo.agent(0).policy, rng);
  auto batch = random_batch(spec, 5, rng);
  {
    Gradient<double> g = algo.agent(0).critic.zero_gradient();
    algo.critic_loss(0, batch, &g);
    auto eval = [&]() { return algo.critic_loss(0, batch, nullptr); };
    EXPECT_LT(test::fd_check(algo.agent(0).critic, g, eval), 1e-4);
  }
  {
    Gradient<double> g = algo.agent(0).policy.zero_gradient();
    algo.policy_objective(0, batch, &g);
    g *= -1.0;
    auto eval = [&]() { return algo.policy_objective(0, batch, nullptr); };
    EXPECT_LT(test::fd_check(algo.agent(0).policy, g, eval), 1e-4);
  }
}

TEST(InferJoint, FullVisibilityReturnsTrueJointWithoutGeneration) {
  auto spec = env::cooperative_navigation();
  env::World w(spec);
  Rng rng(98);
  w.reset(rng);
  auto agents = w.agents();
  agents[0].pos = Vec2(0, 0);
  agents[1].pos = Vec2(0.2, 0);
  agents[2].pos = Vec2(0, 0.2);
  w.set_state(agents, w.landmarks());
  auto full = w.observe();
  auto masked = env::mask_by_distance(full, w.positions(), spec, 1.0, rng);
  Rng grng(99);
  gan::CcWgan<double> ccwgan(gan::masking_rule_from(spec), gan::GanConfig{}, grng);
  const auto calls = ccwgan.generator_calls();
  auto views = rl::infer_joint_observation(ccwgan, masked, spec, rng);
  EXPECT_EQ(ccwgan.generator_calls(), calls);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(views.per_agent[i], full.flat);
  EXPECT_EQ(views.composite, full.flat);
}

// Agents 1 and 2 in range of each other, agent 0 isolated: the pair shares
// one inferred view (one generator call) and agent 0 infers the pair.
TEST(InferJoint, IsolatedAgentSplitsIntoTwoComponents) {
  auto spec = env::physical_deception();
  env::World w(spec);
  Rng rng(100);
  w.reset(rng);
  auto agents = w.agents();
  agents[0].pos = Vec2(-0.9, -0.9);
  agents[1].pos = Vec2(0.7, 0.7);
  agents[2].pos = Vec2(0.8, 0.8);
  w.set_state(agents, w.landmarks());
  auto full = w.observe();
  auto masked = env::mask_by_distance(full, w.positions(), spec, 1.0, rng);
  Rng grng(101);
  gan::CcWgan<double> ccwgan(gan::masking_rule_from(spec), gan::GanConfig{}, grng);
  const auto calls = ccwgan.generator_calls();
  auto views = rl::infer_joint_observation(ccwgan, masked, spec, rng);
  EXPECT_EQ(ccwgan.generator_calls() - calls, 2);
  EXPECT_EQ(views.per_agent[1], views.per_agent[2]);
  EXPECT_NE(views.per_agent[0], views.per_agent[1]);
  // real entries survive inference everywhere
  for (int a = 0; a < 3; ++a)
    for (int k = 0; k < spec.joint_dim(); ++k)
      if (masked.mask[k] == 1.0 && !views.per_agent[a].empty()) {
        // entries inside the component's own pooled knowledge match o
        // exactly; for out-of-component blocks the mask was pooled to 0
        const int owner = k / spec.obs_dim();
        const bool same_component = (owner != 0) == (a != 0);
        if (same_component) EXPECT_EQ(views.per_agent[a][k], full.flat[k]);
      }
  // the pair's view of agent 0's own block is generated, not real
  bool any_diff = false;
  for (int k = 0; k < spec.obs_dim(); ++k)
    if (views.per_agent[1][k] != full.flat[k]) any_diff = true;
  EXPECT_TRUE(any_diff);
  // composite: own blocks come from own component views
  for (int a = 0; a < 3; ++a)
    for (int k = 0; k < spec.obs_dim(); ++k) {
      const int idx = spec.agent_block_offset(a) + k;
      EXPECT_EQ(views.composite[idx], views.per_agent[a][idx]);
    }
}
