#pragma once

#include "pomarl/maddpg.hpp"

namespace pomarl::rl {

// Independent-learner baseline: each agent owns a policy and a critic over
// its own observation and action only; other agents are just environment.
template <class S>
struct DdpgAgent {
  Mlp<S> policy, target_policy;
  Mlp<S> critic, target_critic;
};

template <class S>
class Ddpg {
 public:
  Ddpg(const env::ScenarioSpec& spec, MarlConfig cfg, Rng& init_rng) : spec_(spec), cfg_(cfg) {
    const int obs = spec.obs_dim();
    for (int i = 0; i < spec.n_agents; ++i) {
      DdpgAgent<S> a;
      a.policy = Mlp<S>(obs, cfg_.hidden, 2, nn::OutputActivation::tanh_squash, init_rng);
      a.target_policy = a.policy;
      a.critic = Mlp<S>(obs + 2, cfg_.hidden, 1, nn::OutputActivation::linear, init_rng);
      a.target_critic = a.critic;
      agents_.push_back(std::move(a));
    }
  }

  const MarlConfig& config() const { return cfg_; }
  int n_agents() const { return static_cast<int>(agents_.size()); }
  DdpgAgent<S>& agent(int i) { return agents_[i]; }
  const DdpgAgent<S>& agent(int i) const { return agents_[i]; }
  long long skipped_updates() const { return skipped_; }

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

  S critic_loss(int i, const Batch<S>& batch, Gradient<S>* grads) const {
    const int b = static_cast<int>(batch.obs.rows());
    POMARL_CHECK_MSG(b >= 1, "empty batch");
    const auto& ag = agents_[i];
    Mat<S> next_own = batch.next_obs.middleCols(spec_.agent_block_offset(i), spec_.obs_dim());
    Mat<S> next_a = ag.target_policy.forward(next_own);
    Mat<S> target_in(b, spec_.obs_dim() + 2);
    target_in << next_own, next_a;
    Mat<S> y = batch.rewards.col(i) + S(cfg_.gamma) * ag.target_critic.forward(target_in);
    Mat<S> own = batch.obs.middleCols(spec_.agent_block_offset(i), spec_.obs_dim());
    Mat<S> own_a = batch.actions.middleCols(2 * i, 2);
    Mat<S> online_in(b, spec_.obs_dim() + 2);
    online_in << own, own_a;
    Tape<S> tape;
    Mat<S> q = ag.critic.forward(online_in, tape);
    Mat<S> err = q - y;
    const S loss = err.squaredNorm() / S(b);
    if (grads) ag.critic.backward(tape, Mat<S>(err * (S(2) / S(b))), *grads);
    return loss;
  }

  S policy_objective(int i, const Batch<S>& batch, Gradient<S>* grads) const {
    const int b = static_cast<int>(batch.obs.rows());
    POMARL_CHECK_MSG(b >= 1, "empty batch");
    const auto& ag = agents_[i];
    Mat<S> own = batch.obs.middleCols(spec_.agent_block_offset(i), spec_.obs_dim());
    Tape<S> pi_tape;
    Mat<S> a = ag.policy.forward(own, pi_tape);
    Mat<S> critic_in(b, spec_.obs_dim() + 2);
    critic_in << own, a;
    Tape<S> q_tape;
    Mat<S> q = ag.critic.forward(critic_in, q_tape);
    const S objective = q.sum() / S(b);
    if (grads) {
      Gradient<S> sink = ag.critic.zero_gradient();
      Mat<S> d_in = ag.critic.backward(q_tape, Mat<S>::Constant(b, 1, S(1) / S(b)), sink);
      ag.policy.backward(pi_tape, Mat<S>(-d_in.rightCols(2)), *grads);
    }
    return objective;
  }

  MarlUpdateMetrics update(const RlReplayBuffer& buffer, Rng& rng) {
    MarlUpdateMetrics m;
    if (buffer.size() < static_cast<std::size_t>(cfg_.batch_size)) return m;
    double critic_sum = 0, policy_sum = 0;
    const long long skipped_before = skipped_;
    for (int i = 0; i < n_agents(); ++i) {
      Batch<S> batch = sample_batch<S>(buffer, cfg_.batch_size, rng);
      {
        Gradient<S> g = agents_[i].critic.zero_gradient();
        const S loss = critic_loss(i, batch, &g);
        if (cfg_.max_grad_norm > 0) nn::clip_gradient_norm(g, S(cfg_.max_grad_norm));
        if (!std::isfinite(static_cast<double>(loss)) ||
            !agents_[i].critic.adam_step(g, S(cfg_.lr_critic)))
          ++skipped_;
        critic_sum += static_cast<double>(loss);
      }
      {
        Gradient<S> g = agents_[i].policy.zero_gradient();
        const S objective = policy_objective(i, batch, &g);
        if (cfg_.max_grad_norm > 0) nn::clip_gradient_norm(g, S(cfg_.max_grad_norm));
        if (!std::isfinite(static_cast<double>(objective)) ||
            !agents_[i].policy.adam_step(g, S(cfg_.lr_policy)))
          ++skipped_;
        policy_sum += static_cast<double>(objective);
      }
    }
    for (auto& ag : agents_) {
      polyak_update(ag.target_policy, ag.policy, S(cfg_.tau));
      polyak_update(ag.target_critic, ag.critic, S(cfg_.tau));
    }
    m.updated = true;
    m.critic_loss = critic_sum / n_agents();
    m.policy_objective = policy_sum / n_agents();
    m.skipped = static_cast<int>(skipped_ - skipped_before);
    return m;
  }

 private:
  env::ScenarioSpec spec_;
  MarlConfig cfg_;
  std::vector<DdpgAgent<S>> agents_;
  long long skipped_ = 0;
};

}  // namespace pomarl::rl
