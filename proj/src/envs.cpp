#include "prolonet/envs.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prolonet/core.hpp"

namespace prolonet {

// ---------------------------------------------------------------------------
// Cart pole

CartPoleState cartpole_dynamics(const CartPoleState& s, std::size_t action) {
  using namespace cartpole;
  if (action > 1) throw InvalidInput("cart pole action must be 0 (left) or 1 (right)");
  constexpr double total_mass = kCartMass + kPoleMass;
  constexpr double pole_mass_length = kPoleMass * kHalfLength;

  const double force = action == kRight ? kForce : -kForce;
  const double cos_t = std::cos(s.theta);
  const double sin_t = std::sin(s.theta);
  const double temp = (force + pole_mass_length * s.theta_dot * s.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) / (kHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_mass_length * theta_acc * cos_t / total_mass;

  CartPoleState next;
  next.x = s.x + kDt * s.x_dot;
  next.x_dot = s.x_dot + kDt * x_acc;
  next.theta = s.theta + kDt * s.theta_dot;
  next.theta_dot = s.theta_dot + kDt * theta_acc;
  return next;
}

bool cartpole_failed(const CartPoleState& s) {
  return std::abs(s.x) > cartpole::kXLimit || std::abs(s.theta) > cartpole::kThetaLimit;
}

namespace {

Observation to_observation(const CartPoleState& s) { return {s.x, s.x_dot, s.theta, s.theta_dot}; }

}  // namespace

std::vector<Observation> CartPoleEnv::reset(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> init(-0.05, 0.05);
  state_.x = init(rng);
  state_.x_dot = init(rng);
  state_.theta = init(rng);
  state_.theta_dot = init(rng);
  steps_ = 0;
  done_ = false;
  return {to_observation(state_)};
}

EnvStep CartPoleEnv::step(std::span<const std::size_t> actions) {
  if (actions.size() != 1) throw InvalidInput("cart pole expects exactly one action");
  if (done_) throw InvalidInput("cart pole episode already finished; call reset()");
  state_ = cartpole_dynamics(state_, actions[0]);
  ++steps_;
  done_ = cartpole_failed(state_) || steps_ >= cartpole::kMaxSteps;
  // Every step taken earns +1, so the episode reward equals its length.
  return {{to_observation(state_)}, {1.0}, done_};
}

std::vector<std::string> CartPoleEnv::trace_header() const { return {"x", "x_dot", "theta", "theta_dot"}; }

std::vector<double> CartPoleEnv::trace_row() const { return to_observation(state_); }

// ---------------------------------------------------------------------------
// Wildfire

namespace {

double distance(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void reflect(double& p, double& v, double limit) {
  if (p < 0.0) {
    p = -p;
    v = -v;
  } else if (p > limit) {
    p = 2.0 * limit - p;
    v = -v;
  }
  p = std::clamp(p, 0.0, limit);
}

}  // namespace

std::size_t closest_drone(const WildfireState& s, std::size_t fire) {
  const auto& f = s.fires.at(fire).position;
  return distance(s.drones[1], f) < distance(s.drones[0], f) ? 1 : 0;
}

Observation wildfire_observation(const WildfireState& s, std::size_t drone) {
  const auto& d = s.drones.at(drone);
  const double g = wildfire::kGridSize;
  Observation obs(6);
  for (std::size_t k = 0; k < 2; ++k) {
    const auto& f = s.fires[k].position;
    obs[2 * k] = (f.y - d.y) / g;      // north of the drone is positive
    obs[2 * k + 1] = (d.x - f.x) / g;  // west of the drone is positive
  }
  obs[4] = closest_drone(s, 0) == drone ? 1.0 : 0.0;
  obs[5] = closest_drone(s, 1) == drone ? 1.0 : 0.0;
  return obs;
}

namespace {

double nearest_drone_distance(const WildfireState& s, std::size_t fire) {
  const auto& f = s.fires[fire].position;
  return std::min(distance(s.drones[0], f), distance(s.drones[1], f));
}

}  // namespace

double wildfire_reward(const WildfireState& s) {
  return -(nearest_drone_distance(s, 0) + nearest_drone_distance(s, 1)) / wildfire::kGridSize;
}

double wildfire_fire_distance(const WildfireState& s) {
  return 0.5 * (nearest_drone_distance(s, 0) + nearest_drone_distance(s, 1));
}

WildfireState wildfire_dynamics(const WildfireState& s, std::span<const std::size_t> actions,
                                const WildfireConfig& cfg, std::mt19937_64& rng) {
  if (actions.size() != 2) throw InvalidInput("wildfire expects one action per drone (2)");
  const double g = wildfire::kGridSize;
  WildfireState next = s;
  for (std::size_t i = 0; i < 2; ++i) {
    auto& d = next.drones[i];
    switch (actions[i]) {
      case wildfire::kNorth: d.y += cfg.stride; break;
      case wildfire::kEast: d.x += cfg.stride; break;
      case wildfire::kSouth: d.y -= cfg.stride; break;
      case wildfire::kWest: d.x -= cfg.stride; break;
      default: throw InvalidInput("wildfire action must be in [0, 4)");
    }
    d.x = std::clamp(d.x, 0.0, g);
    d.y = std::clamp(d.y, 0.0, g);
  }
  std::normal_distribution<double> jitter(0.0, 1.0);
  for (auto& fire : next.fires) {
    const double jx = cfg.jitter_stddev > 0.0 ? cfg.jitter_stddev * jitter(rng) : 0.0;
    const double jy = cfg.jitter_stddev > 0.0 ? cfg.jitter_stddev * jitter(rng) : 0.0;
    fire.position.x += fire.velocity.x + jx;
    fire.position.y += fire.velocity.y + jy;
    reflect(fire.position.x, fire.velocity.x, g);
    reflect(fire.position.y, fire.velocity.y, g);
  }
  return next;
}

std::vector<Observation> WildfireEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  std::uniform_real_distribution<double> pos(0.0, wildfire::kGridSize);
  std::uniform_real_distribution<double> speed(cfg_.min_speed, cfg_.max_speed);
  std::uniform_real_distribution<double> heading(0.0, 2.0 * std::numbers::pi);
  for (auto& d : state_.drones) d = {pos(rng_), pos(rng_)};
  for (auto& f : state_.fires) {
    f.position = {pos(rng_), pos(rng_)};
    const double v = speed(rng_);
    const double h = heading(rng_);
    f.velocity = {v * std::cos(h), v * std::sin(h)};
  }
  steps_ = 0;
  return {wildfire_observation(state_, 0), wildfire_observation(state_, 1)};
}

EnvStep WildfireEnv::step(std::span<const std::size_t> actions) {
  if (steps_ >= cfg_.max_steps) throw InvalidInput("wildfire episode already finished; call reset()");
  state_ = wildfire_dynamics(state_, actions, cfg_, rng_);
  ++steps_;
  const double r = wildfire_reward(state_);
  return {{wildfire_observation(state_, 0), wildfire_observation(state_, 1)}, {r, r}, steps_ >= cfg_.max_steps};
}

std::vector<std::string> WildfireEnv::trace_header() const {
  return {"drone0_x", "drone0_y", "drone1_x", "drone1_y", "fire0_x", "fire0_y", "fire1_x", "fire1_y"};
}

std::vector<double> WildfireEnv::trace_row() const {
  return {state_.drones[0].x, state_.drones[0].y, state_.drones[1].x, state_.drones[1].y,
          state_.fires[0].position.x, state_.fires[0].position.y, state_.fires[1].position.x,
          state_.fires[1].position.y};
}

// ---------------------------------------------------------------------------

Rollout multiagent_run(const PolicyFn& policy, Env& env, std::uint64_t env_seed, std::mt19937_64& rng,
                       const StepObserver& observer) {
  const std::size_t agents = env.agent_count();
  Rollout out;
  out.per_agent.resize(agents);
  auto obs = env.reset(env_seed);
  if (observer) observer(env, 0);
  std::vector<std::size_t> actions(agents);
  std::vector<Decision> decisions(agents);
  double distance_total = 0.0;
  bool done = false;
  while (!done) {
    for (std::size_t a = 0; a < agents; ++a) {
      decisions[a] = policy(obs[a], rng);
      actions[a] = decisions[a].action;
    }
    EnvStep step = env.step(actions);
    for (std::size_t a = 0; a < agents; ++a) {
      Transition t;
      t.state = std::move(obs[a]);
      t.action = decisions[a].action;
      t.action_probs = std::move(decisions[a].probs);
      t.reward = step.rewards[a];
      t.value_estimate = decisions[a].value;
      t.expert_action = decisions[a].expert_action;
      out.per_agent[a].transitions.push_back(std::move(t));
    }
    out.episode_reward += step.rewards[0];
    distance_total += env.tracking_error();
    ++out.length;
    obs = std::move(step.observations);
    done = step.done;
    if (observer) observer(env, out.length);
  }
  out.mean_fire_distance = out.length ? distance_total / static_cast<double>(out.length) : 0.0;
  return out;
}

}  // namespace prolonet
