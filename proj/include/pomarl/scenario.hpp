#pragma once

#include <string>
#include <vector>

#include "pomarl/contract.hpp"

namespace pomarl::env {

// One labeled segment of a per-agent observation vector. ref_agent is the
// world agent index the segment describes, or -1 for own-state and landmark
// segments (those are always locally sensed and never masked).
struct ObsField {
  std::string name;
  int offset = 0;
  int dim = 0;
  int ref_agent = -1;
};

struct AgentTraits {
  bool is_adversary = false;
  double size = 0.05;
  double accel = 5.0;        // action-to-force sensitivity
  double max_speed = -1.0;   // < 0 means unbounded
  bool collide = true;
};

struct LandmarkTraits {
  double size = 0.05;
  bool collide = false;
};

// Static description of one task: entity roster, reward wiring constants and
// the per-agent observation layout. World width is fixed at 2 ([-1,1]^2).
class ScenarioSpec {
 public:
  std::string name;
  int n_agents = 0;
  int n_landmarks = 0;
  std::vector<AgentTraits> agents;
  std::vector<LandmarkTraits> landmarks;
  std::vector<int> adversary_indices;
  std::vector<int> cooperating_team;  // the team whose reward the plots track
  int goal_landmark = -1;             // physical_deception only
  bool observe_other_velocities = false;
  double world_half_width = 1.0;

  // Reward shaping constants (see the scenario table in the README).
  double collision_reward = 10.0;   // predator/prey tag bonus magnitude
  double spread_collision_penalty = 1.0;

  // Per-agent observation layout: own velocity, own position, landmark
  // relative positions, then other agents' relative positions in increasing
  // agent index, then (optionally) other agents' velocities in the same
  // order.
  std::vector<ObsField> agent_fields(int i) const {
    POMARL_CHECK(i >= 0 && i < n_agents);
    std::vector<ObsField> fields;
    int off = 0;
    auto push = [&](const std::string& name, int dim, int ref) {
      fields.push_back({name, off, dim, ref});
      off += dim;
    };
    push("own_vel", 2, -1);
    push("own_pos", 2, -1);
    for (int l = 0; l < n_landmarks; ++l) push("landmark_rel_" + std::to_string(l), 2, -1);
    for (int j = 0; j < n_agents; ++j)
      if (j != i) push("other_pos_" + std::to_string(j), 2, j);
    if (observe_other_velocities)
      for (int j = 0; j < n_agents; ++j)
        if (j != i) push("other_vel_" + std::to_string(j), 2, j);
    return fields;
  }

  int obs_dim() const {
    int d = 4 + 2 * n_landmarks + 2 * (n_agents - 1);
    if (observe_other_velocities) d += 2 * (n_agents - 1);
    return d;
  }

  int joint_dim() const { return n_agents * obs_dim(); }

  // [offset, offset+len) of agent i's vector within the flattened joint
  // observation.
  int agent_block_offset(int i) const { return i * obs_dim(); }

  // Flattened joint-observation indices, inside agent i's vector, of every
  // field referencing agent j. Used by both distance masking and the GAN's
  // random masking rule.
  std::vector<int> reference_slice(int i, int j) const {
    POMARL_CHECK(i != j);
    std::vector<int> idx;
    const int base = agent_block_offset(i);
    for (const ObsField& f : agent_fields(i)) {
      if (f.ref_agent != j) continue;
      for (int k = 0; k < f.dim; ++k) idx.push_back(base + f.offset + k);
    }
    return idx;
  }

  // All flattened indices that go dark when agent j drops out entirely:
  // j's whole vector plus every reference to j elsewhere.
  std::vector<int> missing_agent_slice(int j) const {
    std::vector<int> idx;
    const int base = agent_block_offset(j);
    for (int k = 0; k < obs_dim(); ++k) idx.push_back(base + k);
    for (int i = 0; i < n_agents; ++i) {
      if (i == j) continue;
      const auto refs = reference_slice(i, j);
      idx.insert(idx.end(), refs.begin(), refs.end());
    }
    return idx;
  }

  bool is_adversary(int i) const { return agents[i].is_adversary; }

  void validate() const {
    POMARL_CHECK(n_agents >= 2);
    POMARL_CHECK(static_cast<int>(agents.size()) == n_agents);
    POMARL_CHECK(static_cast<int>(landmarks.size()) == n_landmarks);
    for (int a : adversary_indices) POMARL_CHECK(a >= 0 && a < n_agents);
    int sum = 0;
    for (const ObsField& f : agent_fields(0)) sum += f.dim;
    POMARL_CHECK_MSG(sum == obs_dim(), "obs layout does not cover the observation length");
  }
};

// 1 adversary + 2 cooperators, 2 landmarks, one of which is the goal.
// Entities pass through each other (no contact forces). The goal is always
// landmark 0; its position is randomized every reset.
inline ScenarioSpec physical_deception() {
  ScenarioSpec s;
  s.name = "physical_deception";
  s.n_agents = 3;
  s.n_landmarks = 2;
  s.agents.resize(3);
  for (auto& a : s.agents) {
    a.size = 0.15;
    a.accel = 5.0;
    a.collide = false;
  }
  s.agents[0].is_adversary = true;
  s.adversary_indices = {0};
  s.cooperating_team = {1, 2};
  s.landmarks.assign(2, LandmarkTraits{0.08, false});
  s.goal_landmark = 0;
  s.validate();
  return s;
}

// 3 slow predators chase 1 faster prey around 2 fixed obstacles.
inline ScenarioSpec predator_prey() {
  ScenarioSpec s;
  s.name = "predator_prey";
  s.n_agents = 4;
  s.n_landmarks = 2;
  s.agents.resize(4);
  for (int i = 0; i < 3; ++i) {
    s.agents[i].is_adversary = true;
    s.agents[i].size = 0.075;
    s.agents[i].accel = 3.0;
    s.agents[i].max_speed = 1.0;
  }
  s.agents[3].size = 0.05;
  s.agents[3].accel = 4.0;
  s.agents[3].max_speed = 1.3;
  s.adversary_indices = {0, 1, 2};
  s.cooperating_team = {0, 1, 2};
  s.landmarks.assign(2, LandmarkTraits{0.2, true});
  s.observe_other_velocities = true;
  s.validate();
  return s;
}

// 3 agents cover 3 landmarks under a shared team reward.
inline ScenarioSpec cooperative_navigation() {
  ScenarioSpec s;
  s.name = "cooperative_navigation";
  s.n_agents = 3;
  s.n_landmarks = 3;
  s.agents.resize(3);
  for (auto& a : s.agents) {
    a.size = 0.15;
    a.accel = 5.0;
  }
  s.cooperating_team = {0, 1, 2};
  s.landmarks.assign(3, LandmarkTraits{0.05, false});
  s.validate();
  return s;
}

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {"physical_deception", "predator_prey",
                                                 "cooperative_navigation"};
  return names;
}

inline ScenarioSpec make_scenario(const std::string& name) {
  if (name == "physical_deception") return physical_deception();
  if (name == "predator_prey") return predator_prey();
  if (name == "cooperative_navigation") return cooperative_navigation();
  std::string msg = "unknown scenario '" + name + "'; valid scenarios:";
  for (const auto& n : scenario_names()) msg += " " + n;
  throw ConfigError(msg);
}

}  // namespace pomarl::env
