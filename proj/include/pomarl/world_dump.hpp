#pragma once

#include <ostream>
#include <vector>

#include <json.hpp>

#include "pomarl/world.hpp"

namespace pomarl::harness {

// One JSON line per step: positions, velocities, rewards and the step's
// visibility mask. Regenerates debugging plots without rerunning.
inline void dump_world_step(std::ostream& os, const env::World& world, int episode, int step,
                            const std::vector<double>& rewards, const std::vector<double>& mask) {
  nlohmann::json j;
  j["episode"] = episode;
  j["step"] = step;
  auto& pos = j["positions"] = nlohmann::json::array();
  auto& vel = j["velocities"] = nlohmann::json::array();
  for (const auto& a : world.agents()) {
    pos.push_back({a.pos.x(), a.pos.y()});
    vel.push_back({a.vel.x(), a.vel.y()});
  }
  auto& lm = j["landmarks"] = nlohmann::json::array();
  for (const auto& l : world.landmarks()) lm.push_back({l.x(), l.y()});
  j["rewards"] = rewards;
  j["mask"] = mask;
  os << j.dump() << "\n";
}

}  // namespace pomarl::harness
