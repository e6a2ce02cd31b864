#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "pomarl/contract.hpp"
#include "pomarl/rng.hpp"
#include "pomarl/scenario.hpp"

namespace pomarl::env {

using Vec2 = Eigen::Vector2d;

// Flattened joint observation: n_agents consecutive per-agent vectors.
struct JointObservation {
  std::vector<double> flat;
  int n_agents = 0;
  int obs_dim = 0;

  double* agent(int i) { return flat.data() + i * obs_dim; }
  const double* agent(int i) const { return flat.data() + i * obs_dim; }
  int size() const { return static_cast<int>(flat.size()); }

  std::vector<double> agent_vector(int i) const {
    return std::vector<double>(agent(i), agent(i) + obs_dim);
  }
};

struct AgentState {
  Vec2 pos = Vec2::Zero();
  Vec2 vel = Vec2::Zero();
};

// Environment-side disturbance applied in the decentralized phase:
// value + translation + scale * z with z ~ N(0,1) elementwise.
struct DynamicsPerturbation {
  bool enabled = false;
  double action_noise_scale = 0.0;
  double obs_noise_scale = 0.0;
  Vec2 action_translation = Vec2::Zero();
  std::vector<double> obs_translation;  // joint-observation length
};

inline Vec2 perturb_action(const Vec2& a, const DynamicsPerturbation& p, Rng& rng) {
  if (!p.enabled) return a;
  Vec2 out = a + p.action_translation;
  out.x() += p.action_noise_scale * rng.gaussian();
  out.y() += p.action_noise_scale * rng.gaussian();
  return out;
}

inline JointObservation perturb_observation(const JointObservation& o,
                                            const DynamicsPerturbation& p, Rng& rng) {
  if (!p.enabled) return o;
  POMARL_CHECK(p.obs_translation.empty() ||
               p.obs_translation.size() == o.flat.size());
  JointObservation out = o;
  for (std::size_t k = 0; k < out.flat.size(); ++k) {
    const double t = p.obs_translation.empty() ? 0.0 : p.obs_translation[k];
    out.flat[k] += t + p.obs_noise_scale * rng.gaussian();
  }
  return out;
}

inline DynamicsPerturbation draw_perturbation(const ScenarioSpec& spec, double sigma_action,
                                              double sigma_obs, double translation_range,
                                              Rng& rng) {
  DynamicsPerturbation p;
  p.enabled = true;
  p.action_noise_scale = sigma_action;
  p.obs_noise_scale = sigma_obs;
  p.action_translation =
      Vec2(rng.uniform(-translation_range, translation_range),
           rng.uniform(-translation_range, translation_range));
  p.obs_translation.resize(spec.joint_dim());
  for (double& t : p.obs_translation) t = rng.uniform(-translation_range, translation_range);
  return p;
}

// 2D particle world. Double-integrator dynamics with velocity damping and
// softplus contact forces between collideable entities; constants follow the
// standard particle-environment implementation.
class World {
 public:
  static constexpr double kDt = 0.1;
  static constexpr double kDamping = 0.25;
  static constexpr double kContactForce = 100.0;
  static constexpr double kContactMargin = 0.001;
  static constexpr int kEpisodeSteps = 200;
  // Hard wall one arena-width beyond the [-1,1] square. Episodes are 200
  // steps, long enough for untrained agents to drift arbitrarily far
  // otherwise; the boundary-penalty ramp stays fully inside the wall.
  static constexpr double kPositionBound = 2.0;

  explicit World(ScenarioSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    agents_.resize(spec_.n_agents);
    landmarks_.assign(spec_.n_landmarks, Vec2::Zero());
  }

  const ScenarioSpec& spec() const { return spec_; }
  const std::vector<AgentState>& agents() const { return agents_; }
  const std::vector<Vec2>& landmarks() const { return landmarks_; }

  std::vector<Vec2> positions() const {
    std::vector<Vec2> p(agents_.size());
    for (std::size_t i = 0; i < agents_.size(); ++i) p[i] = agents_[i].pos;
    return p;
  }

  // Test hook: place entities directly.
  void set_state(const std::vector<AgentState>& agents, const std::vector<Vec2>& landmarks) {
    POMARL_CHECK(agents.size() == agents_.size() && landmarks.size() == landmarks_.size());
    agents_ = agents;
    landmarks_ = landmarks;
  }

  JointObservation reset(Rng& rng) {
    for (auto& a : agents_) {
      a.pos = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
      a.vel = Vec2::Zero();
    }
    for (auto& l : landmarks_)
      l = Vec2(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    return observe();
  }

  // Actions are per-agent 2D accelerations; components are clamped to
  // [-1,1] and scaled by the agent's sensitivity before integration:
  //   v <- (1 - damping) * v + (accel * a + contact) * dt,  p <- p + v * dt
  std::pair<JointObservation, std::vector<double>> step(const std::vector<Vec2>& actions) {
    POMARL_CHECK(static_cast<int>(actions.size()) == spec_.n_agents);
    std::vector<Vec2> force(spec_.n_agents, Vec2::Zero());
    for (int i = 0; i < spec_.n_agents; ++i) {
      Vec2 a(std::clamp(actions[i].x(), -1.0, 1.0), std::clamp(actions[i].y(), -1.0, 1.0));
      force[i] = spec_.agents[i].accel * a;
    }
    accumulate_contact_forces(force);
    for (int i = 0; i < spec_.n_agents; ++i) {
      AgentState& st = agents_[i];
      st.vel = (1.0 - kDamping) * st.vel + force[i] * kDt;
      const double cap = spec_.agents[i].max_speed;
      if (cap >= 0.0) {
        const double speed = st.vel.norm();
        if (speed > cap) st.vel *= cap / speed;
      }
      st.pos += st.vel * kDt;
      for (int ax = 0; ax < 2; ++ax) {
        if (st.pos[ax] > kPositionBound) {
          st.pos[ax] = kPositionBound;
          st.vel[ax] = std::min(st.vel[ax], 0.0);
        } else if (st.pos[ax] < -kPositionBound) {
          st.pos[ax] = -kPositionBound;
          st.vel[ax] = std::max(st.vel[ax], 0.0);
        }
      }
    }
    return {observe(), rewards()};
  }

  JointObservation observe() const {
    JointObservation o;
    o.n_agents = spec_.n_agents;
    o.obs_dim = spec_.obs_dim();
    o.flat.resize(spec_.joint_dim());
    for (int i = 0; i < spec_.n_agents; ++i) {
      double* v = o.agent(i);
      int k = 0;
      v[k++] = agents_[i].vel.x();
      v[k++] = agents_[i].vel.y();
      v[k++] = agents_[i].pos.x();
      v[k++] = agents_[i].pos.y();
      for (int l = 0; l < spec_.n_landmarks; ++l) {
        v[k++] = landmarks_[l].x() - agents_[i].pos.x();
        v[k++] = landmarks_[l].y() - agents_[i].pos.y();
      }
      for (int j = 0; j < spec_.n_agents; ++j) {
        if (j == i) continue;
        v[k++] = agents_[j].pos.x() - agents_[i].pos.x();
        v[k++] = agents_[j].pos.y() - agents_[i].pos.y();
      }
      if (spec_.observe_other_velocities) {
        for (int j = 0; j < spec_.n_agents; ++j) {
          if (j == i) continue;
          v[k++] = agents_[j].vel.x();
          v[k++] = agents_[j].vel.y();
        }
      }
      POMARL_CHECK(k == o.obs_dim);
    }
    return o;
  }

  std::vector<double> rewards() const {
    if (spec_.name == "physical_deception") return reward_physical_deception(*this);
    if (spec_.name == "predator_prey") return reward_predator_prey(*this);
    return reward_cooperative_navigation(*this);
  }

  bool is_collision(int i, int j) const {
    const double d = (agents_[i].pos - agents_[j].pos).norm();
    return d < spec_.agents[i].size + spec_.agents[j].size;
  }

  // Cooperators chase the goal landmark while the adversary hunts it too;
  // the team is paid for its best coverage of the goal and for keeping the
  // adversary away from it.
  friend std::vector<double> reward_physical_deception(const World& w) {
    POMARL_CHECK_MSG(w.spec_.name == "physical_deception", "wrong scenario");
    const Vec2 goal = w.landmarks_[w.spec_.goal_landmark];
    double min_good = std::numeric_limits<double>::infinity();
    double adv_dist_sum = 0.0;
    for (int i = 0; i < w.spec_.n_agents; ++i) {
      const double d = (w.agents_[i].pos - goal).norm();
      if (w.spec_.is_adversary(i))
        adv_dist_sum += d;
      else
        min_good = std::min(min_good, d);
    }
    std::vector<double> r(w.spec_.n_agents);
    for (int i = 0; i < w.spec_.n_agents; ++i) {
      if (w.spec_.is_adversary(i))
        r[i] = -(w.agents_[i].pos - goal).norm();
      else
        r[i] = -min_good + adv_dist_sum;
    }
    return r;
  }

  // Every predator is paid the tag bonus whenever any predator touches the
  // prey; the prey pays it and is additionally penalized for leaving the
  // arena (linear ramp past 0.9, exponential past 1.0, capped at 10 per
  // axis).
  friend std::vector<double> reward_predator_prey(const World& w) {
    POMARL_CHECK_MSG(w.spec_.name == "predator_prey", "wrong scenario");
    int collisions = 0;
    int prey = -1;
    for (int i = 0; i < w.spec_.n_agents; ++i)
      if (!w.spec_.is_adversary(i)) prey = i;
    for (int i = 0; i < w.spec_.n_agents; ++i)
      if (w.spec_.is_adversary(i) && w.is_collision(i, prey)) ++collisions;
    std::vector<double> r(w.spec_.n_agents, 0.0);
    for (int i = 0; i < w.spec_.n_agents; ++i) {
      if (w.spec_.is_adversary(i)) {
        r[i] = w.spec_.collision_reward * collisions;
      } else {
        r[i] = -w.spec_.collision_reward * collisions;
        r[i] -= boundary_penalty(std::abs(w.agents_[i].pos.x()));
        r[i] -= boundary_penalty(std::abs(w.agents_[i].pos.y()));
      }
    }
    return r;
  }

  // Shared scalar: -sum over landmarks of the closest agent distance, minus
  // a penalty per colliding agent pair. Identical for every agent.
  friend std::vector<double> reward_cooperative_navigation(const World& w) {
    POMARL_CHECK_MSG(w.spec_.name == "cooperative_navigation", "wrong scenario");
    double team = 0.0;
    for (int l = 0; l < w.spec_.n_landmarks; ++l) {
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < w.spec_.n_agents; ++i)
        best = std::min(best, (w.agents_[i].pos - w.landmarks_[l]).norm());
      team -= best;
    }
    for (int i = 0; i < w.spec_.n_agents; ++i)
      for (int j = i + 1; j < w.spec_.n_agents; ++j)
        if (w.is_collision(i, j)) team -= w.spec_.spread_collision_penalty;
    return std::vector<double>(w.spec_.n_agents, team);
  }

  static double boundary_penalty(double x) {
    if (x < 0.9) return 0.0;
    if (x < 1.0) return (x - 0.9) * 10.0;
    return std::min(std::exp(2.0 * x - 2.0), 10.0);
  }

 private:
  void accumulate_contact_forces(std::vector<Vec2>& force) const {
    auto contact = [&](const Vec2& pa, const Vec2& pb, double ra, double rb) -> Vec2 {
      const Vec2 delta = pa - pb;
      const double dist = std::max(delta.norm(), 1e-12);
      const double overlap = -(dist - (ra + rb)) / kContactMargin;
      // softplus keeps deep penetration finite
      const double pen =
          (std::max(overlap, 0.0) + std::log1p(std::exp(-std::abs(overlap)))) * kContactMargin;
      return kContactForce * (delta / dist) * pen;
    };
    for (int i = 0; i < spec_.n_agents; ++i) {
      if (!spec_.agents[i].collide) continue;
      for (int j = i + 1; j < spec_.n_agents; ++j) {
        if (!spec_.agents[j].collide) continue;
        const Vec2 f = contact(agents_[i].pos, agents_[j].pos, spec_.agents[i].size,
                               spec_.agents[j].size);
        force[i] += f;
        force[j] -= f;
      }
      for (int l = 0; l < spec_.n_landmarks; ++l) {
        if (!spec_.landmarks[l].collide) continue;
        force[i] += contact(agents_[i].pos, landmarks_[l], spec_.agents[i].size,
                            spec_.landmarks[l].size);
      }
    }
  }

  ScenarioSpec spec_;
  std::vector<AgentState> agents_;
  std::vector<Vec2> landmarks_;
};

}  // namespace pomarl::env
