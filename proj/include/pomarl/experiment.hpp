#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "pomarl/csv.hpp"
#include "pomarl/svg_plot.hpp"
#include "pomarl/trial.hpp"

namespace pomarl::harness {

template <class S>
struct ExperimentResult {
  ExperimentConfig config;
  std::vector<TrialResult<S>> trials;  // ordered by trial index
  int failures = 0;
  CsvTable aggregate;
  std::filesystem::path out_dir;
};

inline std::string trial_stem(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "trial_%03d", index);
  return buf;
}

namespace detail {

template <class S>
CsvTable aggregate_trials(const env::ScenarioSpec& spec,
                          const std::vector<TrialResult<S>>& trials, int total_episodes) {
  // every trial-CSV column after episode/phase is a metric
  const auto trial_header = trial_csv_header(spec);
  const std::vector<std::string> metrics(trial_header.begin() + 2, trial_header.end());
  CsvTable agg;
  agg.header.push_back("episode");
  for (const auto& m : metrics) {
    agg.header.push_back(m + "_mean");
    agg.header.push_back(m + "_std");
  }
  for (int ep = 0; ep < total_episodes; ++ep) {
    std::vector<double> row{static_cast<double>(ep)};
    for (std::size_t mi = 0; mi < metrics.size(); ++mi) {
      std::vector<double> xs;
      for (const auto& t : trials) {
        if (t.failed) continue;
        const auto r = trial_csv_row(t.episodes[ep]);
        xs.push_back(r[2 + mi]);  // columns after episode,phase line up with metrics
      }
      const auto [mean, sd] = mean_std(xs);
      row.push_back(mean);
      row.push_back(sd);
    }
    agg.rows.push_back(std::move(row));
  }
  return agg;
}

inline std::vector<double> column(const CsvTable& t, const std::string& name) {
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (t.header[c] != name) continue;
    std::vector<double> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) out.push_back(r[c]);
    return out;
  }
  throw ConfigError("missing CSV column: " + name);
}

}  // namespace detail

inline void plot_from_aggregate(const CsvTable& agg, const ExperimentConfig& cfg,
                                const std::string& path);
inline std::size_t lookup_mse_col(const CsvTable& agg);

// Runs all trials (parallel across a worker pool, deterministic per-trial
// streams), writes per-trial CSVs, checkpoints, the aggregate CSV and the
// reward plot. A failed trial is recorded and skipped by aggregation.
template <class S>
ExperimentResult<S> run_experiment(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  const env::ScenarioSpec spec = env::make_scenario(cfg.scenario);
  ExperimentResult<S> result;
  result.config = cfg;
  result.out_dir = fs::path(cfg.out);
  fs::create_directories(result.out_dir);
  fs::create_directories(result.out_dir / "checkpoints");
  {
    std::ofstream os(result.out_dir / "config.txt");
    os << echo_config(cfg);
  }

  result.trials.resize(cfg.trials);
  std::atomic<int> next{0};
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  const int n_threads =
      std::max(1, std::min(cfg.trials, cfg.threads > 0 ? cfg.threads : std::max(1, hw)));
  auto worker = [&]() {
    while (true) {
      const int idx = next.fetch_add(1);
      if (idx >= cfg.trials) return;
      try {
        std::ofstream dump;
        if (cfg.dump_world)
          dump.open(result.out_dir / (trial_stem(idx) + "_world.jsonl"));
        result.trials[idx] = run_trial<S>(cfg, idx, cfg.dump_world ? &dump : nullptr);
      } catch (const std::exception& e) {
        result.trials[idx].trial_index = idx;
        result.trials[idx].failed = true;
        result.trials[idx].error = e.what();
      }
    }
  };
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& t : result.trials) {
    if (t.failed) {
      ++result.failures;
      std::ofstream os(result.out_dir / (trial_stem(t.trial_index) + "_error.txt"));
      os << t.error << "\n";
      continue;
    }
    CsvTable table;
    table.header = trial_csv_header(spec);
    for (const auto& e : t.episodes) table.rows.push_back(trial_csv_row(e));
    table.write((result.out_dir / (trial_stem(t.trial_index) + ".csv")).string());
    t.boundary_checkpoint.save(
        (result.out_dir / "checkpoints" / (trial_stem(t.trial_index) + "_boundary.ckpt")).string());
    t.final_checkpoint.save(
        (result.out_dir / "checkpoints" / (trial_stem(t.trial_index) + "_final.ckpt")).string());
  }

  result.aggregate = detail::aggregate_trials(spec, result.trials, cfg.total_episodes());
  result.aggregate.write((result.out_dir / "aggregate.csv").string());
  plot_from_aggregate(result.aggregate, cfg, (result.out_dir / "reward.svg").string());
  if (cfg.algo == "maddpg_infer") {
    PlotSeries mse{"reconstruction mse", series_color(1),
                   detail::column(result.aggregate, "recon_mse_mean"),
                   detail::column(result.aggregate, "recon_mse_std")};
    write_line_plot((result.out_dir / "recon_mse.svg").string(),
                    "CC-WGAN reconstruction MSE (" + cfg.scenario + ")", "episode", "mse", {mse},
                    cfg.episodes_centralized);
  }
  return result;
}

inline void plot_from_aggregate(const CsvTable& agg, const ExperimentConfig& cfg,
                                const std::string& path) {
  PlotSeries team{"cooperating team", series_color(0), detail::column(agg, "team_reward_mean"),
                  detail::column(agg, "team_reward_std")};
  std::vector<PlotSeries> series{team};
  const auto other = detail::column(agg, "other_team_reward_mean");
  bool has_other = false;
  for (double v : other)
    if (!std::isnan(v)) has_other = true;
  if (has_other)
    series.push_back(PlotSeries{"opposing side", series_color(1), other,
                                detail::column(agg, "other_team_reward_std")});
  write_line_plot(path, cfg.scenario + " / " + cfg.algo + " reward", "episode",
                  "episode reward", series, cfg.episodes_centralized);
}

// Regenerates the plots of a finished run directory from its CSVs alone.
inline void regenerate_plots(const std::string& run_dir) {
  namespace fs = std::filesystem;
  const ExperimentConfig cfg = parse_config((fs::path(run_dir) / "config.txt").string(), {});
  CsvTable agg = CsvTable::read((fs::path(run_dir) / "aggregate.csv").string());
  plot_from_aggregate(agg, cfg, (fs::path(run_dir) / "reward.svg").string());
  if (cfg.algo == "maddpg_infer") {
    PlotSeries mse{"reconstruction mse", series_color(1), detail::column(agg, "recon_mse_mean"),
                   detail::column(agg, "recon_mse_std")};
    write_line_plot((fs::path(run_dir) / "recon_mse.svg").string(),
                    "CC-WGAN reconstruction MSE (" + cfg.scenario + ")", "episode", "mse", {mse},
                    cfg.episodes_centralized);
  }
}

// Reconstruction-MSE sweep over partial observability distances: one
// maddpg_infer experiment per d_P value, plus a combined per-episode CSV
// with one MSE column per distance and a combined plot.
template <class S>
std::vector<ExperimentResult<S>> sweep_dp(const ExperimentConfig& base,
                                          const std::vector<double>& dps) {
  POMARL_CHECK_MSG(!dps.empty(), "empty d_P list");
  namespace fs = std::filesystem;
  fs::create_directories(base.out);
  std::vector<ExperimentResult<S>> results;
  CsvTable combined;
  combined.header.push_back("episode");
  for (double dp : dps) {
    ExperimentConfig cfg = base;
    cfg.algo = "maddpg_infer";
    cfg.dp = dp;
    cfg.out = (fs::path(base.out) / ("dp_" + fmt(dp))).string();
    results.push_back(run_experiment<S>(cfg));
    combined.header.push_back("mse_dp_" + fmt(dp));
  }
  std::vector<PlotSeries> series;
  for (int ep = 0; ep < base.total_episodes(); ++ep) {
    std::vector<double> row{static_cast<double>(ep)};
    for (const auto& r : results) row.push_back(r.aggregate.rows[ep][lookup_mse_col(r.aggregate)]);
    combined.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < dps.size(); ++i)
    series.push_back(PlotSeries{"d_P = " + fmt(dps[i]), series_color(static_cast<int>(i)),
                                detail::column(results[i].aggregate, "recon_mse_mean"),
                                {}});
  combined.write((fs::path(base.out) / "sweep_mse.csv").string());
  write_line_plot((fs::path(base.out) / "sweep_mse.svg").string(),
                  "reconstruction MSE across d_P (" + base.scenario + ")", "episode", "mse",
                  series, base.episodes_centralized);
  return results;
}

inline std::size_t lookup_mse_col(const CsvTable& agg) {
  for (std::size_t c = 0; c < agg.header.size(); ++c)
    if (agg.header[c] == "recon_mse_mean") return c;
  throw ConfigError("missing CSV column: recon_mse_mean");
}

// The four decentralized-update arms: policy updates and GAN updates each
// toggled on/off. Always runs maddpg_infer so inference stays active.
template <class S>
std::vector<ExperimentResult<S>> ablate_updates(const ExperimentConfig& base) {
  namespace fs = std::filesystem;
  fs::create_directories(base.out);
  const std::pair<bool, bool> arms[4] = {{true, true}, {true, false}, {false, true},
                                         {false, false}};
  std::vector<ExperimentResult<S>> results;
  std::vector<PlotSeries> series;
  CsvTable combined;
  combined.header.push_back("episode");
  int idx = 0;
  for (auto [policy_on, gan_on] : arms) {
    ExperimentConfig cfg = base;
    cfg.algo = "maddpg_infer";
    cfg.policy_updates = policy_on;
    cfg.gan_updates = gan_on;
    const std::string arm = std::string("arm_policy_") + (policy_on ? "on" : "off") + "_gan_" +
                            (gan_on ? "on" : "off");
    cfg.out = (fs::path(base.out) / arm).string();
    results.push_back(run_experiment<S>(cfg));
    combined.header.push_back(arm);
    series.push_back(PlotSeries{arm, series_color(idx++),
                                detail::column(results.back().aggregate, "team_reward_mean"),
                                detail::column(results.back().aggregate, "team_reward_std")});
  }
  std::vector<std::vector<double>> team_cols;
  for (const auto& r : results) team_cols.push_back(detail::column(r.aggregate, "team_reward_mean"));
  for (int ep = 0; ep < base.total_episodes(); ++ep) {
    std::vector<double> row{static_cast<double>(ep)};
    for (const auto& col : team_cols) row.push_back(col[ep]);
    combined.rows.push_back(std::move(row));
  }
  combined.write((fs::path(base.out) / "ablation.csv").string());
  write_line_plot((fs::path(base.out) / "ablation.svg").string(),
                  "decentralized update ablation (" + base.scenario + ")", "episode",
                  "team episode reward", series, base.episodes_centralized);
  return results;
}

}  // namespace pomarl::harness
