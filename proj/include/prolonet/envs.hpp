#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "prolonet/trajectory.hpp"

namespace prolonet {

using Observation = std::vector<double>;

struct EnvStep {
  std::vector<Observation> observations;  // one per agent
  std::vector<double> rewards;            // one per agent
  bool done = false;
};

/// Episodic environment with one observation and one discrete action per
/// agent. Every episode ends after a bounded number of steps.
class Env {
 public:
  virtual ~Env() = default;

  virtual std::vector<Observation> reset(std::uint64_t seed) = 0;
  virtual EnvStep step(std::span<const std::size_t> actions) = 0;

  virtual std::size_t observation_dim() const = 0;
  virtual std::size_t action_dim() const = 0;
  virtual std::size_t agent_count() const { return 1; }
  virtual std::unique_ptr<Env> clone() const = 0;

  /// Column names and current values for --render-trace output.
  virtual std::vector<std::string> trace_header() const = 0;
  virtual std::vector<double> trace_row() const = 0;

  /// Domain-specific tracking error reported alongside reward (wildfire:
  /// mean distance from each fire to its nearest drone). Zero elsewhere.
  virtual double tracking_error() const { return 0.0; }
};

// ---------------------------------------------------------------------------
// Cart pole

struct CartPoleState {
  double x = 0.0;          // m
  double x_dot = 0.0;      // m/s
  double theta = 0.0;      // rad
  double theta_dot = 0.0;  // rad/s

  bool operator==(const CartPoleState&) const = default;
};

namespace cartpole {
inline constexpr double kGravity = 9.8;
inline constexpr double kCartMass = 1.0;
inline constexpr double kPoleMass = 0.1;
inline constexpr double kHalfLength = 0.5;
inline constexpr double kForce = 10.0;
inline constexpr double kDt = 0.02;
inline constexpr double kXLimit = 2.4;
inline constexpr double kThetaLimit = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
inline constexpr std::size_t kMaxSteps = 500;
inline constexpr std::size_t kLeft = 0;
inline constexpr std::size_t kRight = 1;
}  // namespace cartpole

/// One explicit-Euler step of the classic dynamics. Action 0 pushes left,
/// action 1 pushes right.
CartPoleState cartpole_dynamics(const CartPoleState& s, std::size_t action);
bool cartpole_failed(const CartPoleState& s);

class CartPoleEnv final : public Env {
 public:
  std::vector<Observation> reset(std::uint64_t seed) override;
  EnvStep step(std::span<const std::size_t> actions) override;

  std::size_t observation_dim() const override { return 4; }
  std::size_t action_dim() const override { return 2; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<CartPoleEnv>(*this); }
  std::vector<std::string> trace_header() const override;
  std::vector<double> trace_row() const override;

  const CartPoleState& state() const { return state_; }
  void set_state(const CartPoleState& s) { state_ = s; steps_ = 0; done_ = false; }
  std::size_t steps() const { return steps_; }

 private:
  CartPoleState state_;
  std::size_t steps_ = 0;
  bool done_ = false;
};

// ---------------------------------------------------------------------------
// Wildfire tracking

namespace wildfire {
inline constexpr double kGridSize = 500.0;
inline constexpr double kStride = 5.0;
inline constexpr std::size_t kMaxSteps = 300;
inline constexpr std::size_t kNorth = 0;
inline constexpr std::size_t kEast = 1;
inline constexpr std::size_t kSouth = 2;
inline constexpr std::size_t kWest = 3;
}  // namespace wildfire

struct Vec2 {
  double x = 0.0;  // east
  double y = 0.0;  // north

  bool operator==(const Vec2&) const = default;
};

struct Fire {
  Vec2 position;
  Vec2 velocity;  // per-episode drift, grid units per step

  bool operator==(const Fire&) const = default;
};

struct WildfireState {
  std::array<Vec2, 2> drones;
  std::array<Fire, 2> fires;

  bool operator==(const WildfireState&) const = default;
};

struct WildfireConfig {
  double min_speed = 0.5;
  double max_speed = 2.0;
  double jitter_stddev = 0.5;  // variance 0.25
  double stride = wildfire::kStride;
  std::size_t max_steps = wildfire::kMaxSteps;
};

/// Index of the drone that counts as closest to `fire` (ties go to the lower
/// index).
std::size_t closest_drone(const WildfireState& s, std::size_t fire);

/// {D_N(F1), D_W(F1), D_N(F2), D_W(F2), C(F1), C(F2)} for `drone`. D_N and D_W
/// are signed offsets (fire minus drone, north and west positive) divided by
/// the grid size; C flags are 1 when this drone is the closest to that fire.
Observation wildfire_observation(const WildfireState& s, std::size_t drone);

/// Negative sum over fires of the distance to the nearest drone, divided by
/// the grid size.
double wildfire_reward(const WildfireState& s);

/// Mean over fires of the distance to the nearest drone, in grid units.
double wildfire_fire_distance(const WildfireState& s);

/// Moves drones by one stride (clamped to the grid), then advances fires by
/// their drift plus Gaussian jitter, reflecting at the grid edges.
WildfireState wildfire_dynamics(const WildfireState& s, std::span<const std::size_t> actions,
                                const WildfireConfig& cfg, std::mt19937_64& rng);

class WildfireEnv final : public Env {
 public:
  explicit WildfireEnv(WildfireConfig cfg = {}) : cfg_(cfg) {}

  std::vector<Observation> reset(std::uint64_t seed) override;
  EnvStep step(std::span<const std::size_t> actions) override;

  std::size_t observation_dim() const override { return 6; }
  std::size_t action_dim() const override { return 4; }
  std::size_t agent_count() const override { return 2; }
  std::unique_ptr<Env> clone() const override { return std::make_unique<WildfireEnv>(*this); }
  std::vector<std::string> trace_header() const override;
  std::vector<double> trace_row() const override;
  double tracking_error() const override { return wildfire_fire_distance(state_); }

  const WildfireState& state() const { return state_; }
  void set_state(const WildfireState& s) { state_ = s; steps_ = 0; }
  const WildfireConfig& config() const { return cfg_; }

 private:
  WildfireConfig cfg_;
  WildfireState state_;
  std::size_t steps_ = 0;
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Rollouts

/// What a policy reports for one observation.
struct Decision {
  std::size_t action = 0;
  std::vector<double> probs;
  double value = 0.0;
  std::optional<std::size_t> expert_action;
};

using PolicyFn = std::function<Decision(std::span<const double> observation, std::mt19937_64& rng)>;
using StepObserver = std::function<void(const Env&, std::size_t step)>;

struct Rollout {
  std::vector<Trajectory> per_agent;  // returns/advantages not yet filled
  double episode_reward = 0.0;        // summed rewards of agent 0
  std::size_t length = 0;
  double mean_fire_distance = 0.0;    // wildfire only
};

/// Runs one episode in which every agent acts independently on its own
/// observation with the same policy.
Rollout multiagent_run(const PolicyFn& policy, Env& env, std::uint64_t env_seed, std::mt19937_64& rng,
                       const StepObserver& observer = {});

}  // namespace prolonet
