#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prolonet/agents.hpp"
#include "prolonet/domain.hpp"
#include "prolonet/train.hpp"

namespace prolonet {

/// Everything needed to reproduce a training run.
struct RunConfig {
  Domain domain = Domain::CartPole;
  AgentKind agent = AgentKind::ProLoNetInit;
  std::optional<std::string> tree_source;  // DSL text
  std::optional<nlohmann::json> tree;      // treespec-v1, used when tree_source is absent
  TrainerConfig trainer;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t episodes = 1000;
  double mistake_rate = 0.0;
  std::size_t eval_episodes = 50;
  std::size_t running_window = 100;
  bool greedy_eval = false;
  bool stop_when_solved = false;  // end a seed once its running mean reaches the domain target

  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Keys present in `doc` override `base`. Throws InvalidInput on bad values.
RunConfig run_config_from_json(const nlohmann::json& doc, const RunConfig& base = {});

/// The tree named by the config, or the domain default.
TreeSpec resolve_tree(const RunConfig& cfg);
Agent make_run_agent(const RunConfig& cfg, std::uint64_t seed);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> metrics;
  EvalResult initial;
  EvalResult final;
  double best_running_mean = 0.0;
  std::optional<std::size_t> solved_episode;  // 1-based episode at which the running mean first hit the target
  std::vector<DivergenceRecord> divergence;   // ProLoNet agents only
  std::optional<Agent> initial_agent;
  std::optional<Agent> final_agent;

  double mean_training_reward() const;
};

nlohmann::json to_json(const SeedResult& r);

using SeedMetricCallback = std::function<void(std::uint64_t seed, const EpisodeMetrics&)>;

/// Trains one seed. When `seed_dir` is given, writes metrics.csv,
/// metrics.jsonl, growth.jsonl, init.json, checkpoints/ and divergence.csv
/// into it.
SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed, const std::optional<std::filesystem::path>& seed_dir = {},
                    const SeedMetricCallback& on_metric = {});

struct RunResult {
  std::vector<SeedResult> seeds;  // in cfg.seeds order
  std::vector<double> mean_curve;  // reward averaged across seeds per episode
  double best_mean_running = 0.0;  // best running mean of mean_curve
  std::optional<std::size_t> mean_solved_episode;
};

nlohmann::json summary_json(const RunConfig& cfg, const RunResult& r);

/// Runs every seed (up to `parallel` at once). With `out_dir`, writes
/// config.json, per-seed directories, metrics.csv merged over seeds and
/// summary.json. Results do not depend on `parallel`.
RunResult run_training(const RunConfig& cfg, const std::optional<std::filesystem::path>& out_dir = {},
                       const SeedMetricCallback& on_metric = {}, std::size_t parallel = 0);

/// Running mean over `window` episodes; entry i covers episodes
/// [i, i + window).
std::vector<double> running_mean(std::span<const double> values, std::size_t window);

// ---------------------------------------------------------------------------

struct AblationRow {
  double mistake_rate = 0.0;
  std::vector<double> initial_rewards;   // per seed
  std::vector<double> training_rewards;  // per seed, mean over training episodes; empty when episodes == 0
  double mean_initial = 0.0;
  double stddev_initial = 0.0;
  double mean_training = 0.0;
  double stddev_training = 0.0;
};

/// One row per mistake rate. Each seed's mistakes are drawn with that seed.
std::vector<AblationRow> run_ablation(const RunConfig& cfg, std::span<const double> mistake_rates,
                                      std::size_t parallel = 0);

// ---------------------------------------------------------------------------

/// Reads a checkpoint or model file: bare prolonet-v1 / mlp-v1 / treespec-v1
/// documents, or checkpoint files that wrap one under "model".
Agent load_agent_file(const std::filesystem::path& path, Domain domain);

/// Divergence between `init` and every checkpoint in `checkpoint_dir`, one
/// record per file, sorted by checkpoint label.
std::vector<DivergenceRecord> divergence_from_dir(const ProLoNet& init, const std::filesystem::path& checkpoint_dir);

void write_divergence_csv(const std::filesystem::path& path, std::span<const DivergenceRecord> records);

}  // namespace prolonet
