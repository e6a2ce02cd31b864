#pragma once

#include <algorithm>
#include <vector>

#include "pomarl/ccwgan.hpp"
#include "pomarl/masking.hpp"

namespace pomarl::rl {

// Result of pooling and inference across visibility components.
struct InferredViews {
  // Per agent, the full joint observation as seen by that agent's
  // component: real entries where anything in range sensed them, generated
  // entries elsewhere. Agents in the same component share an identical view.
  std::vector<std::vector<double>> per_agent;
  // One canonical joint observation for the shared replay buffer: each
  // agent's own vector taken from its own component's view.
  std::vector<double> composite;
};

// Agents within range communicate all local information, so each connected
// component of the visibility graph pools its members' partial observations
// and infers everything else with one generator call. Entries in an
// out-of-component agent's own vector are unknown to the component and are
// noise-filled before generation.
template <class S>
InferredViews infer_joint_observation(const gan::CcWgan<S>& ccwgan,
                                      const env::MaskedObservation& mo,
                                      const env::ScenarioSpec& spec, Rng& rng) {
  const int n = spec.n_agents;
  const int joint = spec.joint_dim();
  POMARL_CHECK(mo.partial.size() == joint && static_cast<int>(mo.mask.size()) == joint);
  InferredViews out;
  out.per_agent.resize(n);
  out.composite.assign(joint, 0.0);
  const std::vector<int> comp = mo.graph.components();
  const int n_comp = 1 + *std::max_element(comp.begin(), comp.end());
  for (int c = 0; c < n_comp; ++c) {
    std::vector<double> pooled_partial = mo.partial.flat;
    std::vector<double> pooled_mask = mo.mask;
    for (int u = 0; u < n; ++u) {
      if (comp[u] == c) continue;
      const int base = spec.agent_block_offset(u);
      for (int k = 0; k < spec.obs_dim(); ++k) {
        if (pooled_mask[base + k] == 1.0) {
          pooled_mask[base + k] = 0.0;
          pooled_partial[base + k] = rng.gaussian();
        }
      }
    }
    std::vector<double> view = ccwgan.infer(pooled_partial, pooled_mask);
    for (int a = 0; a < n; ++a) {
      if (comp[a] != c) continue;
      out.per_agent[a] = view;
      const int base = spec.agent_block_offset(a);
      for (int k = 0; k < spec.obs_dim(); ++k) out.composite[base + k] = view[base + k];
    }
  }
  return out;
}

}  // namespace pomarl::rl
