#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "prolonet/agents.hpp"
#include "prolonet/core.hpp"
#include "prolonet/envs.hpp"
#include "prolonet/growth.hpp"
#include "prolonet/trajectory.hpp"

namespace prolonet {

/// splitmix64 over (base, a, b); used to derive independent stream seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

// ---------------------------------------------------------------------------
// Returns and losses

/// Fills returns (discounted return-to-go) and advantages (return minus the
/// stored value estimate). Throws InvalidInput on an empty trajectory.
void compute_returns_advantages(Trajectory& traj, double discount);

/// One policy-gradient sample as seen by a loss.
struct PolicySample {
  std::size_t action = 0;
  std::span<const double> old_probs;  // behavior distribution
  double advantage = 0.0;
};

/// Loss value plus its gradient with respect to each sample's logits.
struct LossOutput {
  double loss = 0.0;
  std::vector<std::vector<double>> grad_logits;
  std::size_t skipped = 0;  // samples dropped for non-finite terms
};

/// Mean over the batch of -min(r*A, clip(r, 1-clip, 1+clip)*A), where r is
/// new_probs[a] / old_probs[a].
LossOutput ppo_clip_loss(std::span<const PolicySample> batch, std::span<const std::vector<double>> new_probs,
                         double clip);

inline constexpr double kKlFloor = 1e-4;

double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Mean over the batch of -A*log(new_probs[a]) / max(KL(new || old), 1e-4).
/// Samples whose KL or log-probability is not finite are skipped.
LossOutput kl_scaled_loss(std::span<const PolicySample> batch, std::span<const std::vector<double>> new_probs);

/// Mean cross-entropy of the expert actions under new_probs.
LossOutput imitation_loss(std::span<const std::size_t> expert_actions, std::span<const std::vector<double>> new_probs);

/// Mean of (outputs[i][actions[i]] - targets[i])^2; gradients are with
/// respect to the critic's raw outputs.
LossOutput critic_loss(std::span<const std::size_t> actions, std::span<const std::vector<double>> outputs,
                       std::span<const double> targets);

struct RmsPropState {
  double decay = 0.99;
  double eps = 1e-8;
  std::vector<double> mean_square;  // sized lazily on first step
};

/// v = decay*v + (1-decay)*g^2; params -= lr*g/(sqrt(v)+eps).
void rmsprop_step(std::span<double> params, std::span<const double> grads, RmsPropState& state, double lr);

// ---------------------------------------------------------------------------
// Trainer

enum class LossVariant { PpoClip, KlScaled };
enum class CriticTarget { Return, Reward };
enum class UpdateMode { Imitation, PolicyGradient };

LossVariant parse_loss_variant(std::string_view name);
std::string to_string(LossVariant v);
std::string to_string(UpdateMode m);

struct TrainerConfig {
  double learning_rate = 1e-2;
  double discount = 0.99;
  double ppo_clip = 0.2;
  std::size_t epochs = 4;
  std::size_t batch_cap = 0;  // minibatch = min(buffer size, batch_cap); 0 means the whole buffer
  LossVariant loss = LossVariant::PpoClip;
  std::size_t loki_n = 0;
  bool rollback = false;
  std::size_t rollback_probes = 5;
  double rollback_tolerance = 0.05;  // relative to |mean reward before|
  bool growth = true;
  GrowthConfig growth_config;
  CriticTarget critic_target = CriticTarget::Return;
  bool normalize_advantages = true;
  std::size_t workers = 1;  // episodes collected and pooled per update

  void validate() const;
};

nlohmann::json to_json(const TrainerConfig& cfg);
/// Missing keys keep their defaults; unknown keys are rejected.
TrainerConfig trainer_config_from_json(const nlohmann::json& doc);

UpdateMode loki_schedule(std::size_t episode, const TrainerConfig& cfg);

struct EpisodeMetrics {
  std::size_t episode = 0;
  double reward = 0.0;  // mean over pooled workers
  double length = 0.0;
  double loss = 0.0;    // mean policy loss over the update
  double mean_fire_distance = 0.0;
  UpdateMode mode = UpdateMode::PolicyGradient;
  bool rolled_back = false;
  bool aborted = false;
  std::size_t skipped_samples = 0;
  std::vector<GrowthEvent> growth_events;
};

nlohmann::json to_json(const EpisodeMetrics& m);

/// Runs episodes against one agent. Collection runs one thread per worker;
/// updates happen on the calling thread.
class Trainer {
 public:
  Trainer(Agent& agent, const Env& env_prototype, TrainerConfig cfg, std::uint64_t seed);

  EpisodeMetrics run_episode();
  std::size_t episodes_done() const { return episode_; }
  const TrainerConfig& config() const { return cfg_; }
  /// RMSProp accumulators keyed "actor", "deep" and "critic".
  nlohmann::json optimizer_state() const;

 private:
  struct Buffer {
    std::vector<const Transition*> samples;
    std::vector<double> advantages;
    std::vector<double> targets;
  };
  struct Snapshot;

  std::vector<Rollout> collect(std::size_t episode);
  Buffer build_buffer(std::vector<Rollout>& rollouts) const;
  double update(const Buffer& buffer, UpdateMode mode, std::size_t& skipped);
  double probe(std::size_t episode);
  Snapshot snapshot() const;
  void restore(const Snapshot& s);

  Agent& agent_;
  std::unique_ptr<Env> env_;
  TrainerConfig cfg_;
  std::uint64_t seed_;
  std::size_t episode_ = 0;
  std::mt19937_64 shuffle_rng_;
  RmsPropState actor_opt_;
  RmsPropState deep_opt_;
  RmsPropState critic_opt_;
};

using EpisodeCallback = std::function<void(const EpisodeMetrics&, const Agent&)>;

/// Trains for `episodes` episodes, invoking `on_episode` after each update.
std::vector<EpisodeMetrics> train_episode_loop(Agent& agent, const Env& env, const TrainerConfig& cfg,
                                               std::size_t episodes, std::uint64_t seed,
                                               const EpisodeCallback& on_episode = {});

struct EvalResult {
  std::vector<double> rewards;
  std::vector<double> lengths;
  double mean = 0.0;
  double stddev = 0.0;
  double mean_length = 0.0;
  double mean_fire_distance = 0.0;
};

/// Runs `episodes` episodes without learning. Episode i uses environment
/// seed mix_seed(seed, i), so different agents see the same start states.
EvalResult evaluate(const Agent& agent, const Env& env, std::size_t episodes, std::uint64_t seed,
                    bool greedy = false, const StepObserver& observer = {},
                    std::vector<Rollout>* rollouts = nullptr);

// ---------------------------------------------------------------------------
// Divergence from initialization

struct DivergenceRecord {
  std::string checkpoint;  // "0.25", "0.5", "0.75", "1", "solved"
  double mse_weights = 0.0;
  double mse_comparators = 0.0;
  double mse_leaves = 0.0;
};

/// Per-category mean squared difference over the nodes and leaves present in
/// `init`. `current` may have grown; appended nodes and leaves are ignored.
DivergenceRecord divergence(const ProLoNet& init, const ProLoNet& current);

}  // namespace prolonet
