#pragma once

#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pomarl/ccwgan.hpp"
#include "pomarl/checkpoint.hpp"
#include "pomarl/config.hpp"
#include "pomarl/ddpg.hpp"
#include "pomarl/infer_obs.hpp"
#include "pomarl/masking.hpp"
#include "pomarl/maddpg.hpp"
#include "pomarl/world.hpp"
#include "pomarl/world_dump.hpp"

namespace pomarl::harness {

struct EpisodeRow {
  int episode = 0;
  int phase = 0;  // 0 centralized, 1 decentralized
  double team_reward = 0;
  double other_team_reward = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> agent_rewards;
  double critic_loss = std::numeric_limits<double>::quiet_NaN();
  double policy_loss = std::numeric_limits<double>::quiet_NaN();
  double d_loss = std::numeric_limits<double>::quiet_NaN();
  double g_loss = std::numeric_limits<double>::quiet_NaN();
  double recon_mse = std::numeric_limits<double>::quiet_NaN();
  double gan_update_index = std::numeric_limits<double>::quiet_NaN();
  double masked_fraction = 0;
};

template <class S>
struct TrialResult {
  int trial_index = 0;
  std::uint64_t seed = 0;
  int phase_boundary = 0;  // first decentralized episode index
  std::vector<EpisodeRow> episodes;
  nn::CheckpointArchive<S> boundary_checkpoint;
  nn::CheckpointArchive<S> final_checkpoint;
  bool failed = false;
  std::string error;
};

inline std::vector<std::string> trial_csv_header(const env::ScenarioSpec& spec) {
  std::vector<std::string> h = {"episode", "phase", "team_reward", "other_team_reward"};
  for (int i = 0; i < spec.n_agents; ++i) h.push_back("reward_agent_" + std::to_string(i));
  for (const char* k : {"critic_loss", "policy_loss", "d_loss", "g_loss", "recon_mse",
                        "gan_update_index", "masked_fraction"})
    h.push_back(k);
  return h;
}

inline std::vector<double> trial_csv_row(const EpisodeRow& e) {
  std::vector<double> r = {static_cast<double>(e.episode), static_cast<double>(e.phase),
                           e.team_reward, e.other_team_reward};
  r.insert(r.end(), e.agent_rewards.begin(), e.agent_rewards.end());
  r.push_back(e.critic_loss);
  r.push_back(e.policy_loss);
  r.push_back(e.d_loss);
  r.push_back(e.g_loss);
  r.push_back(e.recon_mse);
  r.push_back(e.gan_update_index);
  r.push_back(e.masked_fraction);
  return r;
}

namespace detail {

// The agents' working view of the environment for one step.
struct StepView {
  std::vector<std::vector<double>> per_agent;  // policy inputs
  std::vector<double> composite;               // buffered joint observation
  std::vector<double> mask;                    // 1 = real entry, 0 = inferred/noise
  double masked_frac = 0;
};

template <class S>
struct TrialState {
  env::World world;
  rl::MarlConfig marl_cfg;
  std::optional<rl::Maddpg<S>> maddpg;
  std::optional<rl::Ddpg<S>> ddpg;
  std::optional<gan::CcWgan<S>> ccwgan;
  rl::RlReplayBuffer buffer;
  std::optional<gan::ObsReplayBuffer> gan_buffer;

  TrialState(const env::ScenarioSpec& spec, const ExperimentConfig& cfg, Rng& init_rng,
             Rng& gan_init_rng)
      : world(spec),
        marl_cfg(cfg.marl_config()),
        buffer(spec.n_agents, spec.joint_dim(), cfg.buffer_capacity) {
    if (cfg.algo == "ddpg")
      ddpg.emplace(spec, marl_cfg, init_rng);
    else
      maddpg.emplace(spec, marl_cfg, init_rng);
    if (cfg.algo == "maddpg_infer") {
      ccwgan.emplace(gan::masking_rule_from(spec), cfg.gan_config(), gan_init_rng);
      gan_buffer.emplace(spec.joint_dim(), cfg.gan_buffer_capacity);
    }
  }
};

template <class S>
StepView make_view(const env::JointObservation& obs, const env::ScenarioSpec& spec,
                   const ExperimentConfig& cfg, bool decentralized, TrialState<S>& st,
                   Rng& mask_rng) {
  StepView v;
  const int n = spec.n_agents;
  if (!decentralized) {
    v.per_agent.resize(n);
    for (int i = 0; i < n; ++i) v.per_agent[i] = obs.agent_vector(i);
    v.composite = obs.flat;
    v.mask.assign(obs.flat.size(), 1.0);
    return v;
  }
  auto masked = env::mask_by_distance(obs, st.world.positions(), spec, cfg.dp, mask_rng);
  v.mask = masked.mask;
  v.masked_frac = env::masked_fraction(masked.mask);
  if (st.ccwgan) {
    auto views = rl::infer_joint_observation(*st.ccwgan, masked, spec, mask_rng);
    v.per_agent.resize(n);
    for (int i = 0; i < n; ++i) {
      v.per_agent[i].assign(views.per_agent[i].begin() + spec.agent_block_offset(i),
                            views.per_agent[i].begin() + spec.agent_block_offset(i) + spec.obs_dim());
    }
    v.composite = std::move(views.composite);
  } else {
    // no inference: partial observability enters as plain noise
    v.per_agent.resize(n);
    for (int i = 0; i < n; ++i) v.per_agent[i] = masked.partial.agent_vector(i);
    v.composite = masked.partial.flat;
  }
  return v;
}

template <class S>
void save_checkpoint(const TrialState<S>& st, nn::CheckpointArchive<S>& ar) {
  auto put_pair = [&](const std::string& base, const nn::Mlp<S>& online, const nn::Mlp<S>& tgt) {
    ar.put(base, online);
    ar.put(base + "_target", tgt);
  };
  if (st.maddpg) {
    for (int i = 0; i < st.maddpg->n_agents(); ++i) {
      const auto& ag = st.maddpg->agent(i);
      const std::string base = "agent" + std::to_string(i);
      put_pair(base + "/policy", ag.policy, ag.target_policy);
      put_pair(base + "/critic", ag.critic, ag.target_critic);
      for (std::size_t s = 0; s < ag.approx.size(); ++s)
        put_pair(base + "/approx" + std::to_string(s), ag.approx[s], ag.target_approx[s]);
    }
  }
  if (st.ddpg) {
    for (int i = 0; i < st.ddpg->n_agents(); ++i) {
      const auto& ag = st.ddpg->agent(i);
      const std::string base = "agent" + std::to_string(i);
      put_pair(base + "/policy", ag.policy, ag.target_policy);
      put_pair(base + "/critic", ag.critic, ag.target_critic);
    }
  }
  if (st.ccwgan) {
    ar.put("gan/generator", st.ccwgan->generator());
    ar.put("gan/discriminator", st.ccwgan->discriminator());
  }
}

}  // namespace detail

// One independent trial: a centralized phase with full observability
// followed by a decentralized phase with distance masking (plus optional
// dynamics perturbation), 200-step episodes, updates every 100 steps.
// All randomness derives from config.seed + trial_index through separate
// streams so that algorithm arms sharing a seed see identical environments.
template <class S>
TrialResult<S> run_trial(const ExperimentConfig& cfg, int trial_index,
                         std::ostream* world_dump = nullptr) {
  const env::ScenarioSpec spec = env::make_scenario(cfg.scenario);
  TrialResult<S> result;
  result.trial_index = trial_index;
  result.seed = cfg.seed + static_cast<std::uint64_t>(trial_index);
  result.phase_boundary = cfg.episodes_centralized;

  Rng master(result.seed);
  Rng init_rng = master.split();
  Rng env_rng = master.split();
  Rng explore_rng = master.split();
  Rng update_rng = master.split();
  Rng gan_init_rng = master.split();
  Rng gan_rng = master.split();
  Rng mask_rng = master.split();
  Rng perturb_rng = master.split();

  detail::TrialState<S> st(spec, cfg, init_rng, gan_init_rng);

  env::DynamicsPerturbation perturbation;
  if (cfg.perturb)
    perturbation = env::draw_perturbation(spec, cfg.perturb_sigma_action, cfg.perturb_sigma_obs,
                                          cfg.perturb_translation_range, perturb_rng);

  const int total = cfg.total_episodes();
  if (cfg.episodes_centralized == 0) detail::save_checkpoint(st, result.boundary_checkpoint);
  long long global_step = 0;
  for (int ep = 0; ep < total; ++ep) {
    const bool decentralized = ep >= cfg.episodes_centralized;
    const double sigma =
        decentralized
            ? cfg.sigma_expl_final
            : (cfg.episodes_centralized <= 1
                   ? cfg.sigma_expl_init
                   : cfg.sigma_expl_init +
                         (cfg.sigma_expl_final - cfg.sigma_expl_init) *
                             (static_cast<double>(ep) / (cfg.episodes_centralized - 1)));
    const bool perturb_now = decentralized && cfg.perturb;
    const bool marl_updates = !decentralized || cfg.policy_updates;
    const bool gan_updates = st.ccwgan && (!decentralized || cfg.gan_updates);

    env::JointObservation obs = st.world.reset(env_rng);
    if (perturb_now) obs = env::perturb_observation(obs, perturbation, env_rng);
    detail::StepView view = detail::make_view(obs, spec, cfg, decentralized, st, mask_rng);

    EpisodeRow row;
    row.episode = ep;
    row.phase = decentralized ? 1 : 0;
    row.agent_rewards.assign(spec.n_agents, 0.0);
    double masked_sum = 0;
    int update_count = 0, gan_count = 0;
    double critic_sum = 0, policy_sum = 0, dloss_sum = 0, gloss_sum = 0, mse_sum = 0;
    double gan_index = std::numeric_limits<double>::quiet_NaN();

    for (int t = 0; t < kEpisodeSteps; ++t) {
      if (st.gan_buffer) st.gan_buffer->push(view.composite);
      masked_sum += view.masked_frac;

      std::vector<env::Vec2> chosen(spec.n_agents);
      const bool warmup = global_step < cfg.warmup_steps;
      for (int i = 0; i < spec.n_agents; ++i) {
        if (warmup) {
          chosen[i] = env::Vec2(explore_rng.uniform(-1, 1), explore_rng.uniform(-1, 1));
          continue;
        }
        const auto a = st.maddpg ? st.maddpg->select_action(i, view.per_agent[i], sigma, explore_rng)
                                 : st.ddpg->select_action(i, view.per_agent[i], sigma, explore_rng);
        chosen[i] = env::Vec2(a.first, a.second);
      }
      std::vector<env::Vec2> applied = chosen;
      if (perturb_now)
        for (auto& a : applied) a = env::perturb_action(a, perturbation, env_rng);

      auto [next_obs, rewards] = st.world.step(applied);
      if (perturb_now) next_obs = env::perturb_observation(next_obs, perturbation, env_rng);
      detail::StepView next_view =
          detail::make_view(next_obs, spec, cfg, decentralized, st, mask_rng);

      rl::Transition tr;
      tr.obs = view.composite;
      tr.actions.resize(2 * spec.n_agents);
      for (int i = 0; i < spec.n_agents; ++i) {
        tr.actions[2 * i] = chosen[i].x();
        tr.actions[2 * i + 1] = chosen[i].y();
      }
      tr.rewards = rewards;
      tr.next_obs = next_view.composite;
      tr.mask = view.mask;
      tr.next_mask = next_view.mask;
      st.buffer.push(tr);

      for (int i = 0; i < spec.n_agents; ++i) row.agent_rewards[i] += rewards[i];
      if (world_dump) dump_world_step(*world_dump, st.world, ep, t, rewards, view.mask);

      ++global_step;
      if (global_step % kUpdateEvery == 0) {
        if (marl_updates) {
          const auto m = st.maddpg ? st.maddpg->update(st.buffer, update_rng)
                                   : st.ddpg->update(st.buffer, update_rng);
          if (m.updated) {
            critic_sum += m.critic_loss;
            policy_sum += m.policy_objective;
            ++update_count;
          }
        }
        if (gan_updates) {
          const auto g = st.ccwgan->train_step(*st.gan_buffer, gan_rng);
          if (g.updated) {
            dloss_sum += g.d_loss;
            gloss_sum += g.g_loss;
            mse_sum += g.recon_mse;
            gan_index = static_cast<double>(g.update_index);
            ++gan_count;
          }
        }
      }
      view = std::move(next_view);
    }

    if (update_count > 0) {
      row.critic_loss = critic_sum / update_count;
      row.policy_loss = policy_sum / update_count;
    }
    if (gan_count > 0) {
      row.d_loss = dloss_sum / gan_count;
      row.g_loss = gloss_sum / gan_count;
      row.recon_mse = mse_sum / gan_count;
      row.gan_update_index = gan_index;
    }
    row.masked_fraction = masked_sum / kEpisodeSteps;

    double team_sum = 0;
    for (int i : spec.cooperating_team) team_sum += row.agent_rewards[i];
    row.team_reward = team_sum / static_cast<double>(spec.cooperating_team.size());
    int others = 0;
    double other_sum = 0;
    for (int i = 0; i < spec.n_agents; ++i) {
      if (std::find(spec.cooperating_team.begin(), spec.cooperating_team.end(), i) ==
          spec.cooperating_team.end()) {
        other_sum += row.agent_rewards[i];
        ++others;
      }
    }
    if (others > 0) row.other_team_reward = other_sum / others;

    result.episodes.push_back(std::move(row));
    if (ep + 1 == cfg.episodes_centralized)
      detail::save_checkpoint(st, result.boundary_checkpoint);
  }
  detail::save_checkpoint(st, result.final_checkpoint);
  return result;
}

}  // namespace pomarl::harness
