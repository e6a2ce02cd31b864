#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "pomarl/ccwgan.hpp"
#include "pomarl/contract.hpp"
#include "pomarl/maddpg.hpp"
#include "pomarl/scenario.hpp"

namespace pomarl::harness {

// Episode schedule constants fixed by the experimental protocol.
constexpr int kEpisodeSteps = 200;
constexpr int kUpdateEvery = 100;

struct ExperimentConfig {
  std::string scenario = "cooperative_navigation";
  std::string algo = "maddpg_infer";  // maddpg_infer | maddpg | ddpg
  std::string preset = "full";        // full | smoke (episode defaults)
  int episodes_centralized = 2000;
  int episodes_decentralized = 1000;
  int trials = 30;
  std::uint64_t seed = 0;
  double dp = 1.0;  // partial observability distance in the decentralized phase
  bool perturb = false;
  bool policy_updates = true;  // decentralized-phase update toggles
  bool gan_updates = true;
  std::string out = "runs/run";
  int threads = 0;  // 0 = hardware concurrency
  bool dump_world = false;

  // learner hyperparameters
  double gamma = 0.95;
  int batch_size = 1024;
  std::uint64_t buffer_capacity = 1'000'000;
  double lr_policy = 1e-3;
  double lr_critic = 1e-2;
  double lr_approx = 1e-3;
  double tau = 0.01;
  double entropy_weight = 0.001;
  double approx_log_std = -1.0;
  int hidden = 64;
  double sigma_expl_init = 0.1;
  double sigma_expl_final = 0.02;
  double max_grad_norm = 0.0;
  int warmup_steps = 1024;  // uniform-random action steps before training data counts

  // CC-WGAN hyperparameters
  int gan_hidden = 64;
  int gan_batch_size = 256;
  std::uint64_t gan_buffer_capacity = 1'000'000;
  double lambda_gp = 10.0;
  int n_critic = 5;
  double lr_g = 1e-4;
  double lr_d = 1e-4;
  bool gan_per_agent = false;  // reserved; only the shared model is implemented

  // decentralized-phase dynamics shift
  double perturb_sigma_action = 0.05;
  double perturb_sigma_obs = 0.05;
  double perturb_translation_range = 0.1;

  int total_episodes() const { return episodes_centralized + episodes_decentralized; }

  rl::MarlConfig marl_config() const {
    rl::MarlConfig m;
    m.gamma = gamma;
    m.batch_size = batch_size;
    m.buffer_capacity = buffer_capacity;
    m.lr_policy = lr_policy;
    m.lr_critic = lr_critic;
    m.lr_approx = lr_approx;
    m.tau = tau;
    m.entropy_weight = entropy_weight;
    m.approx_log_std = approx_log_std;
    m.max_grad_norm = max_grad_norm;
    m.hidden = hidden;
    return m;
  }

  gan::GanConfig gan_config() const {
    gan::GanConfig g;
    g.hidden = gan_hidden;
    g.n_critic = n_critic;
    g.batch_size = gan_batch_size;
    g.lambda_gp = lambda_gp;
    g.lr_g = lr_g;
    g.lr_d = lr_d;
    return g;
  }
};

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

template <class T>
T parse_number(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out;
  is >> out;
  if (is.fail() || !is.eof())
    throw ConfigError("config key '" + key + "': cannot parse value '" + v + "'");
  return out;
}

}  // namespace detail

// Flat key = value text; '#' starts a comment, blank lines ignored.
inline std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is.good()) throw ConfigError("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config file " + path + ":" + std::to_string(lineno) +
                        ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Applies file values then overrides (CLI flags win), validating every key.
inline ExperimentConfig resolve_config(const std::map<std::string, std::string>& file_kv,
                                       const std::map<std::string, std::string>& overrides) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> merged = file_kv;
  for (const auto& [k, v] : overrides) merged[k] = v;

  // preset adjusts episode defaults before explicit values apply
  if (auto it = merged.find("preset"); it != merged.end()) {
    cfg.preset = it->second;
    if (cfg.preset == "smoke") {
      cfg.episodes_centralized = 60;
      cfg.episodes_decentralized = 30;
    } else if (cfg.preset != "full") {
      throw ConfigError("config key 'preset': expected full or smoke, got '" + cfg.preset + "'");
    }
  }

  for (const auto& [key, value] : merged) {
    using detail::parse_bool;
    using detail::parse_number;
    if (key == "preset") continue;  // handled above
    else if (key == "scenario") cfg.scenario = value;
    else if (key == "algo") cfg.algo = value;
    else if (key == "episodes_centralized") cfg.episodes_centralized = parse_number<int>(key, value);
    else if (key == "episodes_decentralized") cfg.episodes_decentralized = parse_number<int>(key, value);
    else if (key == "trials") cfg.trials = parse_number<int>(key, value);
    else if (key == "seed") cfg.seed = parse_number<std::uint64_t>(key, value);
    else if (key == "dp") cfg.dp = parse_number<double>(key, value);
    else if (key == "perturb") cfg.perturb = parse_bool(key, value);
    else if (key == "policy_updates") cfg.policy_updates = parse_bool(key, value);
    else if (key == "gan_updates") cfg.gan_updates = parse_bool(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "threads") cfg.threads = parse_number<int>(key, value);
    else if (key == "dump_world") cfg.dump_world = parse_bool(key, value);
    else if (key == "gamma") cfg.gamma = parse_number<double>(key, value);
    else if (key == "batch_size") cfg.batch_size = parse_number<int>(key, value);
    else if (key == "buffer_capacity") cfg.buffer_capacity = parse_number<std::uint64_t>(key, value);
    else if (key == "lr_policy") cfg.lr_policy = parse_number<double>(key, value);
    else if (key == "lr_critic") cfg.lr_critic = parse_number<double>(key, value);
    else if (key == "lr_approx") cfg.lr_approx = parse_number<double>(key, value);
    else if (key == "tau") cfg.tau = parse_number<double>(key, value);
    else if (key == "entropy_weight") cfg.entropy_weight = parse_number<double>(key, value);
    else if (key == "approx_log_std") cfg.approx_log_std = parse_number<double>(key, value);
    else if (key == "hidden") cfg.hidden = parse_number<int>(key, value);
    else if (key == "max_grad_norm") cfg.max_grad_norm = parse_number<double>(key, value);
    else if (key == "warmup_steps") cfg.warmup_steps = parse_number<int>(key, value);
    else if (key == "sigma_expl_init") cfg.sigma_expl_init = parse_number<double>(key, value);
    else if (key == "sigma_expl_final") cfg.sigma_expl_final = parse_number<double>(key, value);
    else if (key == "gan_hidden") cfg.gan_hidden = parse_number<int>(key, value);
    else if (key == "gan_batch_size") cfg.gan_batch_size = parse_number<int>(key, value);
    else if (key == "gan_buffer_capacity") cfg.gan_buffer_capacity = parse_number<std::uint64_t>(key, value);
    else if (key == "lambda_gp") cfg.lambda_gp = parse_number<double>(key, value);
    else if (key == "n_critic") cfg.n_critic = parse_number<int>(key, value);
    else if (key == "lr_g") cfg.lr_g = parse_number<double>(key, value);
    else if (key == "lr_d") cfg.lr_d = parse_number<double>(key, value);
    else if (key == "gan_per_agent") cfg.gan_per_agent = parse_bool(key, value);
    else if (key == "perturb_sigma_action") cfg.perturb_sigma_action = parse_number<double>(key, value);
    else if (key == "perturb_sigma_obs") cfg.perturb_sigma_obs = parse_number<double>(key, value);
    else if (key == "perturb_translation_range") cfg.perturb_translation_range = parse_number<double>(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }

  env::make_scenario(cfg.scenario);  // throws with the valid names listed
  if (cfg.algo != "maddpg_infer" && cfg.algo != "maddpg" && cfg.algo != "ddpg")
    throw ConfigError("config key 'algo': expected maddpg_infer, maddpg or ddpg, got '" +
                      cfg.algo + "'");
  if (cfg.trials < 1) throw ConfigError("config key 'trials': must be >= 1");
  if (cfg.dp < 0.0) throw ConfigError("config key 'dp': must be >= 0");
  if (cfg.episodes_centralized < 0 || cfg.episodes_decentralized < 0)
    throw ConfigError("config key 'episodes_*': must be >= 0");
  if (cfg.batch_size < 1 || cfg.gan_batch_size < 1)
    throw ConfigError("config key 'batch_size': must be >= 1");
  if (cfg.gan_per_agent)
    throw ConfigError("config key 'gan_per_agent': reserved, only the shared CC-WGAN is implemented");
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path,
                                     const std::map<std::string, std::string>& overrides) {
  return resolve_config(path.empty() ? std::map<std::string, std::string>{} : read_config_file(path),
                        overrides);
}

// Full resolved configuration, one sorted key per line; echoed into the
// output directory so a run is reproducible from its artifacts alone.
inline std::string echo_config(const ExperimentConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << "algo = " << c.algo << "\n";
  os << "approx_log_std = " << c.approx_log_std << "\n";
  os << "batch_size = " << c.batch_size << "\n";
  os << "buffer_capacity = " << c.buffer_capacity << "\n";
  os << "dp = " << c.dp << "\n";
  os << "dump_world = " << (c.dump_world ? "true" : "false") << "\n";
  os << "entropy_weight = " << c.entropy_weight << "\n";
  os << "episodes_centralized = " << c.episodes_centralized << "\n";
  os << "episodes_decentralized = " << c.episodes_decentralized << "\n";
  os << "gamma = " << c.gamma << "\n";
  os << "gan_batch_size = " << c.gan_batch_size << "\n";
  os << "gan_buffer_capacity = " << c.gan_buffer_capacity << "\n";
  os << "gan_hidden = " << c.gan_hidden << "\n";
  os << "gan_per_agent = " << (c.gan_per_agent ? "true" : "false") << "\n";
  os << "gan_updates = " << (c.gan_updates ? "true" : "false") << "\n";
  os << "hidden = " << c.hidden << "\n";
  os << "lambda_gp = " << c.lambda_gp << "\n";
  os << "lr_approx = " << c.lr_approx << "\n";
  os << "lr_critic = " << c.lr_critic << "\n";
  os << "lr_d = " << c.lr_d << "\n";
  os << "lr_g = " << c.lr_g << "\n";
  os << "lr_policy = " << c.lr_policy << "\n";
  os << "max_grad_norm = " << c.max_grad_norm << "\n";
  os << "n_critic = " << c.n_critic << "\n";
  os << "out = " << c.out << "\n";
  os << "perturb = " << (c.perturb ? "true" : "false") << "\n";
  os << "perturb_sigma_action = " << c.perturb_sigma_action << "\n";
  os << "perturb_sigma_obs = " << c.perturb_sigma_obs << "\n";
  os << "perturb_translation_range = " << c.perturb_translation_range << "\n";
  os << "policy_updates = " << (c.policy_updates ? "true" : "false") << "\n";
  os << "preset = " << c.preset << "\n";
  os << "scenario = " << c.scenario << "\n";
  os << "seed = " << c.seed << "\n";
  os << "sigma_expl_final = " << c.sigma_expl_final << "\n";
  os << "sigma_expl_init = " << c.sigma_expl_init << "\n";
  os << "tau = " << c.tau << "\n";
  os << "threads = " << c.threads << "\n";
  os << "trials = " << c.trials << "\n";
  os << "warmup_steps = " << c.warmup_steps << "\n";
  return os.str();
}

}  // namespace pomarl::harness
