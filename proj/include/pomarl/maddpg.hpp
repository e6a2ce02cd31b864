#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "pomarl/contract.hpp"
#include "pomarl/mlp.hpp"
#include "pomarl/replay.hpp"
#include "pomarl/rng.hpp"
#include "pomarl/scenario.hpp"

namespace pomarl::rl {

using nn::Gradient;
using nn::Mat;
using nn::Mlp;
using nn::Tape;

struct MarlConfig {
  double gamma = 0.95;
  int batch_size = 1024;
  std::size_t buffer_capacity = 1'000'000;
  double lr_policy = 1e-3;
  double lr_critic = 1e-2;
  double lr_approx = 1e-3;
  double tau = 0.01;
  double entropy_weight = 0.001;  // approximate-policy entropy bonus
  double approx_log_std = -1.0;   // fixed Gaussian log stddev
  double max_grad_norm = 0.0;     // global-norm gradient clip; <= 0 disables
  int hidden = 64;
};

struct MarlUpdateMetrics {
  bool updated = false;
  double critic_loss = std::numeric_limits<double>::quiet_NaN();
  double policy_objective = std::numeric_limits<double>::quiet_NaN();
  double approx_loss = std::numeric_limits<double>::quiet_NaN();
  int skipped = 0;  // updates rejected for non-finite losses/gradients
};

// Column-batched slice of the replay buffer.
template <class S>
struct Batch {
  Mat<S> obs;       // B x joint
  Mat<S> actions;   // B x 2n
  Mat<S> rewards;   // B x n
  Mat<S> next_obs;  // B x joint
};

template <class S>
Batch<S> sample_batch(const RlReplayBuffer& buffer, int batch_size, Rng& rng) {
  Batch<S> b;
  const int joint = buffer.joint_dim();
  const int n = buffer.n_agents();
  b.obs.resize(batch_size, joint);
  b.actions.resize(batch_size, 2 * n);
  b.rewards.resize(batch_size, n);
  b.next_obs.resize(batch_size, joint);
  for (int r = 0; r < batch_size; ++r) {
    auto row = buffer.row(buffer.sample_index(rng));
    for (int k = 0; k < joint; ++k) {
      b.obs(r, k) = static_cast<S>(row.obs[k]);
      b.next_obs(r, k) = static_cast<S>(row.next_obs[k]);
    }
    for (int k = 0; k < 2 * n; ++k) b.actions(r, k) = static_cast<S>(row.actions[k]);
    for (int k = 0; k < n; ++k) b.rewards(r, k) = static_cast<S>(row.rewards[k]);
  }
  return b;
}

// One MADDPG learner: deterministic policy, centralized critic over the
// joint observation and all actions, and Gaussian approximate policies of
// every other agent trained by maximum likelihood. Target copies of all
// three track slowly via polyak updates.
template <class S>
struct MaddpgAgent {
  Mlp<S> policy, target_policy;
  Mlp<S> critic, target_critic;
  std::vector<Mlp<S>> approx, target_approx;  // slot order: other agents ascending
};

template <class S>
class Maddpg {
 public:
  Maddpg(const env::ScenarioSpec& spec, MarlConfig cfg, Rng& init_rng)
      : spec_(spec), cfg_(cfg) {
    const int obs = spec.obs_dim();
    const int joint = spec.joint_dim();
    const int n = spec.n_agents;
    agents_.reserve(n);
    for (int i = 0; i < n; ++i) {
      MaddpgAgent<S> a;
      a.policy = Mlp<S>(obs, cfg_.hidden, 2, nn::OutputActivation::tanh_squash, init_rng);
      a.target_policy = a.policy;
      a.critic = Mlp<S>(joint + 2 * n, cfg_.hidden, 1, nn::OutputActivation::linear, init_rng);
      a.target_critic = a.critic;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        a.approx.emplace_back(obs, cfg_.hidden, 2, nn::OutputActivation::tanh_squash, init_rng);
        a.target_approx.push_back(a.approx.back());
      }
      agents_.push_back(std::move(a));
    }
  }

  const env::ScenarioSpec& spec() const { return spec_; }
  const MarlConfig& config() const { return cfg_; }
  int n_agents() const { return static_cast<int>(agents_.size()); }
  MaddpgAgent<S>& agent(int i) { return agents_[i]; }
  const MaddpgAgent<S>& agent(int i) const { return agents_[i]; }
  long long skipped_updates() const { return skipped_; }

  // Slot of agent j among i's approximate policies.
  static int approx_slot(int i, int j) {
    POMARL_CHECK(i != j);
    return j < i ? j : j - 1;
  }

  // a = clamp(pi_i(o_i) + noise, -1, 1); noise only when sigma > 0.
  std::pair<double, double> select_action(int i, const std::vector<double>& own_obs,
                                          double sigma, Rng& rng) const {
    POMARL_CHECK(static_cast<int>(own_obs.size()) == spec_.obs_dim());
    Mat<S> x(1, spec_.obs_dim());
    for (int k = 0; k < spec_.obs_dim(); ++k) x(0, k) = static_cast<S>(own_obs[k]);
    Mat<S> y = agents_[i].policy.forward(x);
    double ax = static_cast<double>(y(0, 0));
    double ay = static_cast<double>(y(0, 1));
    if (sigma > 0.0) {
      ax += sigma * rng.gaussian();
      ay += sigma * rng.gaussian();
    }
    return {std::clamp(ax, -1.0, 1.0), std::clamp(ay, -1.0, 1.0)};
  }

  // Mean squared TD error against y = r_i + gamma * Q'_i(o', a') where a'
  // comes from the target approximate policies (own slot from the agent's
  // own target policy). Gradients flow to the online critic only.
  S critic_loss(int i, const Batch<S>& batch, Gradient<S>* grads) const {
    const int b = static_cast<int>(batch.obs.rows());
    POMARL_CHECK_MSG(b >= 1, "empty batch");
    const auto& ag = agents_[i];
    Mat<S> next_actions(b, 2 * n_agents());
    for (int j = 0; j < n_agents(); ++j) {
      const Mlp<S>& net = (j == i) ? ag.target_policy : ag.target_approx[approx_slot(i, j)];
      next_actions.middleCols(2 * j, 2) = net.forward(agent_obs(batch.next_obs, j));
    }
    Mat<S> target_in(b, batch.next_obs.cols() + next_actions.cols());
    target_in << batch.next_obs, next_actions;
    Mat<S> y = batch.rewards.col(i) + S(cfg_.gamma) * ag.target_critic.forward(target_in);
    Mat<S> online_in(b, batch.obs.cols() + batch.actions.cols());
    online_in << batch.obs, batch.actions;
    Tape<S> tape;
    Mat<S> q = ag.critic.forward(online_in, tape);
    Mat<S> err = q - y;
    const S loss = err.squaredNorm() / S(b);
    if (grads) {
      Mat<S> cot = err * (S(2) / S(b));
      ag.critic.backward(tape, cot, *grads);
    }
    return loss;
  }

  // E[Q_i(o, a)] with a_i = pi_i(o_i) and a_j = mu_i^j(o_j) held fixed.
  // Gradients (of the descended, negated objective) flow through a_i only.
  S policy_objective(int i, const Batch<S>& batch, Gradient<S>* grads) const {
    const int b = static_cast<int>(batch.obs.rows());
    POMARL_CHECK_MSG(b >= 1, "empty batch");
    const auto& ag = agents_[i];
    Mat<S> actions(b, 2 * n_agents());
    Tape<S> pi_tape;
    for (int j = 0; j < n_agents(); ++j) {
      if (j == i)
        actions.middleCols(2 * j, 2) = ag.policy.forward(agent_obs(batch.obs, i), pi_tape);
      else
        actions.middleCols(2 * j, 2) =
            ag.approx[approx_slot(i, j)].forward(agent_obs(batch.obs, j));
    }
    Mat<S> critic_in(b, batch.obs.cols() + actions.cols());
    critic_in << batch.obs, actions;
    Tape<S> q_tape;
    Mat<S> q = ag.critic.forward(critic_in, q_tape);
    const S objective = q.sum() / S(b);
    if (grads) {
      Gradient<S> critic_sink = ag.critic.zero_gradient();
      Mat<S> d_in = ag.critic.backward(q_tape, Mat<S>::Constant(b, 1, S(1) / S(b)), critic_sink);
      Mat<S> dq_da = d_in.middleCols(batch.obs.cols() + 2 * i, 2);
      ag.policy.backward(pi_tape, Mat<S>(-dq_da), *grads);
    }
    return objective;
  }

  // Negative Gaussian log likelihood of the stored a_j under mean
  // mu_i^j(o_j) with fixed log-std, minus the entropy bonus.
  S approx_loss(int i, int j, const Batch<S>& batch, Gradient<S>* grads) const {
    POMARL_CHECK(i != j);
    const int b = static_cast<int>(batch.obs.rows());
    POMARL_CHECK_MSG(b >= 1, "empty batch");
    const Mlp<S>& net = agents_[i].approx[approx_slot(i, j)];
    Tape<S> tape;
    Mat<S> mean = net.forward(agent_obs(batch.obs, j), tape);
    Mat<S> a = batch.actions.middleCols(2 * j, 2);
    const S sigma = std::exp(S(cfg_.approx_log_std));
    const S log_norm = S(cfg_.approx_log_std) + S(0.5) * std::log(S(2) * S(std::numbers::pi));
    Mat<S> diff = a - mean;
    S nll = diff.squaredNorm() / (S(2) * sigma * sigma * S(b)) + S(2) * log_norm;
    const S entropy = S(2) * (S(cfg_.approx_log_std) + S(0.5) * std::log(S(2) * S(std::numbers::pi) * S(std::numbers::e)));
    const S loss = nll - S(cfg_.entropy_weight) * entropy;
    if (grads) {
      Mat<S> cot = -diff / (sigma * sigma * S(b));
      net.backward(tape, cot, *grads);
    }
    return loss;
  }

  double update_critic(int i, const Batch<S>& batch) {
    Gradient<S> g = agents_[i].critic.zero_gradient();
    const S loss = critic_loss(i, batch, &g);
    if (cfg_.max_grad_norm > 0) nn::clip_gradient_norm(g, S(cfg_.max_grad_norm));
    if (!std::isfinite(static_cast<double>(loss)) ||
        !agents_[i].critic.adam_step(g, S(cfg_.lr_critic)))
      ++skipped_;
    return static_cast<double>(loss);
  }

  double update_policy(int i, const Batch<S>& batch) {
    Gradient<S> g = agents_[i].policy.zero_gradient();
    const S objective = policy_objective(i, batch, &g);
    if (cfg_.max_grad_norm > 0) nn::clip_gradient_norm(g, S(cfg_.max_grad_norm));
    if (!std::isfinite(static_cast<double>(objective)) ||
        !agents_[i].policy.adam_step(g, S(cfg_.lr_policy)))
      ++skipped_;
    return static_cast<double>(objective);
  }

  double update_approx_policy(int i, int j, const Batch<S>& batch) {
    Gradient<S> g = agents_[i].approx[approx_slot(i, j)].zero_gradient();
    const S loss = approx_loss(i, j, batch, &g);
    if (cfg_.max_grad_norm > 0) nn::clip_gradient_norm(g, S(cfg_.max_grad_norm));
    if (!std::isfinite(static_cast<double>(loss)) ||
        !agents_[i].approx[approx_slot(i, j)].adam_step(g, S(cfg_.lr_approx)))
      ++skipped_;
    return static_cast<double>(loss);
  }

  void polyak_all() {
    for (auto& ag : agents_) {
      polyak_update(ag.target_policy, ag.policy, S(cfg_.tau));
      polyak_update(ag.target_critic, ag.critic, S(cfg_.tau));
      for (std::size_t s = 0; s < ag.approx.size(); ++s)
        polyak_update(ag.target_approx[s], ag.approx[s], S(cfg_.tau));
    }
  }

  // Full update pass: per agent, approximate policies for every other
  // agent, then critic, then policy; finally one polyak step on all
  // targets. No-op until the buffer holds a full batch.
  MarlUpdateMetrics update(const RlReplayBuffer& buffer, Rng& rng) {
    MarlUpdateMetrics m;
    if (buffer.size() < static_cast<std::size_t>(cfg_.batch_size)) return m;
    const int skipped_before = static_cast<int>(skipped_);
    double critic_sum = 0, policy_sum = 0, approx_sum = 0;
    int approx_count = 0;
    for (int i = 0; i < n_agents(); ++i) {
      Batch<S> batch = sample_batch<S>(buffer, cfg_.batch_size, rng);
      for (int j = 0; j < n_agents(); ++j) {
        if (j == i) continue;
        approx_sum += update_approx_policy(i, j, batch);
        ++approx_count;
      }
      critic_sum += update_critic(i, batch);
      policy_sum += update_policy(i, batch);
    }
    polyak_all();
    m.updated = true;
    m.critic_loss = critic_sum / n_agents();
    m.policy_objective = policy_sum / n_agents();
    m.approx_loss = approx_sum / approx_count;
    m.skipped = static_cast<int>(skipped_) - skipped_before;
    return m;
  }

  Mat<S> agent_obs(const Mat<S>& joint, int i) const {
    return joint.middleCols(spec_.agent_block_offset(i), spec_.obs_dim());
  }

 private:
  env::ScenarioSpec spec_;
  MarlConfig cfg_;
  std::vector<MaddpgAgent<S>> agents_;
  long long skipped_ = 0;
};

}  // namespace pomarl::rl
