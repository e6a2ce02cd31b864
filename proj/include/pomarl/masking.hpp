#pragma once

#include <vector>

#include "pomarl/contract.hpp"
#include "pomarl/rng.hpp"
#include "pomarl/world.hpp"

namespace pomarl::env {

// {0,1} visibility vector aligned with a flattened joint observation.
// 0 marks an entry that is unavailable and has been noise-filled.
using BinaryMask = std::vector<double>;

// Mutual in-range relation between agents. Distance is symmetric so the
// adjacency always is.
struct VisibilityGraph {
  int n = 0;
  std::vector<char> adj;  // row-major n x n, diagonal true

  bool visible(int i, int j) const { return adj[i * n + j] != 0; }

  // Connected components; component(i) == component(j) iff a chain of
  // in-range pairs links i and j.
  std::vector<int> components() const {
    std::vector<int> comp(n, -1);
    int next = 0;
    for (int s = 0; s < n; ++s) {
      if (comp[s] >= 0) continue;
      comp[s] = next;
      std::vector<int> stack{s};
      while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < n; ++v) {
          if (comp[v] < 0 && visible(u, v)) {
            comp[v] = next;
            stack.push_back(v);
          }
        }
      }
      ++next;
    }
    return comp;
  }
};

struct MaskedObservation {
  JointObservation partial;  // noise where mask is 0, original elsewhere
  BinaryMask mask;
  VisibilityGraph graph;
};

// Applies distance-based partial observability: whenever two agents are
// farther apart than d_p, every entry either one holds about the other is
// zeroed in the mask and replaced with N(0,1) noise in the partial
// observation. Own-state and landmark entries stay visible.
inline MaskedObservation mask_by_distance(const JointObservation& obs,
                                          const std::vector<Vec2>& positions,
                                          const ScenarioSpec& spec, double d_p, Rng& rng) {
  POMARL_CHECK(d_p >= 0.0);
  POMARL_CHECK(static_cast<int>(positions.size()) == spec.n_agents);
  POMARL_CHECK(obs.size() == spec.joint_dim());
  MaskedObservation out;
  out.partial = obs;
  out.mask.assign(obs.flat.size(), 1.0);
  out.graph.n = spec.n_agents;
  out.graph.adj.assign(spec.n_agents * spec.n_agents, 0);
  for (int i = 0; i < spec.n_agents; ++i) out.graph.adj[i * spec.n_agents + i] = 1;
  for (int i = 0; i < spec.n_agents; ++i) {
    for (int j = i + 1; j < spec.n_agents; ++j) {
      const bool in_range = (positions[i] - positions[j]).norm() <= d_p;
      out.graph.adj[i * spec.n_agents + j] = in_range;
      out.graph.adj[j * spec.n_agents + i] = in_range;
      if (in_range) continue;
      for (int idx : spec.reference_slice(i, j)) {
        out.mask[idx] = 0.0;
        out.partial.flat[idx] = rng.gaussian();
      }
      for (int idx : spec.reference_slice(j, i)) {
        out.mask[idx] = 0.0;
        out.partial.flat[idx] = rng.gaussian();
      }
    }
  }
  return out;
}

inline double masked_fraction(const BinaryMask& m) {
  if (m.empty()) return 0.0;
  double zeros = 0;
  for (double v : m) zeros += (v == 0.0);
  return zeros / static_cast<double>(m.size());
}

}  // namespace pomarl::env
