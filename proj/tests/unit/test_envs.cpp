#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "prolonet/envs.hpp"

using namespace prolonet;

namespace {

CartPoleState mirror(const CartPoleState& s) { return {-s.x, -s.x_dot, -s.theta, -s.theta_dot}; }

WildfireConfig still() {
  WildfireConfig cfg;
  cfg.jitter_stddev = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("pushing right from rest") {
  const auto next = cartpole_dynamics({}, cartpole::kRight);
  CHECK(next.x == 0.0);  // Euler: position lags velocity by a step
  CHECK(next.x_dot > 0.0);
  CHECK(next.theta_dot < 0.0);
  const auto after = cartpole_dynamics(next, cartpole::kRight);
  CHECK(after.x > 0.0);
  CHECK(after.theta < 0.0);
}

TEST_CASE("cart pole dynamics are odd-symmetric") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int i = 0; i < 200; ++i) {
    const CartPoleState s{u(rng), u(rng), u(rng), u(rng)};
    for (std::size_t a : {cartpole::kLeft, cartpole::kRight}) {
      const auto lhs = mirror(cartpole_dynamics(s, a));
      const auto rhs = cartpole_dynamics(mirror(s), 1 - a);
      CHECK(lhs.x == doctest::Approx(rhs.x).epsilon(1e-14));
      CHECK(lhs.x_dot == doctest::Approx(rhs.x_dot).epsilon(1e-14));
      CHECK(lhs.theta == doctest::Approx(rhs.theta).epsilon(1e-14));
      CHECK(lhs.theta_dot == doctest::Approx(rhs.theta_dot).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(cartpole_dynamics({}, 2), InvalidInput);
}

TEST_CASE("pushing toward the lean ends the episode where the reference integrator does") {
  CartPoleEnv env;
  env.reset(0);
  env.set_state({0.0, 0.0, 0.05, 0.0});
  oracle::Pole ref{0.0, 0.0, 0.05, 0.0};
  std::size_t expect = 0;
  while (!oracle::pole_down(ref) && expect < cartpole::kMaxSteps) {
    ref = oracle::pole_step(ref, 1);
    ++expect;
  }
  std::size_t steps = 0;
  double total = 0.0;
  bool done = false;
  while (!done) {
    const std::size_t a = cartpole::kRight;
    const auto r = env.step(std::span(&a, 1));
    total += r.rewards[0];
    done = r.done;
    ++steps;
  }
  CHECK(expect < cartpole::kMaxSteps);
  CHECK(steps == expect);
  CHECK(total == double(steps));
  CHECK(env.state().x == doctest::Approx(ref.x).epsilon(1e-12));
  CHECK(env.state().theta == doctest::Approx(ref.th).epsilon(1e-12));
}

TEST_CASE("cart pole reward equals length and caps at the step limit") {
  CartPoleEnv env;
  std::mt19937_64 rng(5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    env.reset(seed);
    double total = 0.0;
    std::size_t steps = 0;
    bool done = false;
    while (!done) {
      // Crude balancing rule so some episodes run long.
      const std::size_t a = env.state().theta + 0.5 * env.state().theta_dot > 0 ? 1 : 0;
      const auto r = env.step(std::span(&a, 1));
      total += r.rewards[0];
      ++steps;
      done = r.done;
    }
    CHECK(total == double(steps));
    CHECK(steps <= cartpole::kMaxSteps);
  }
  const std::size_t a = 0;
  CHECK_THROWS_AS(env.step(std::span(&a, 1)), InvalidInput);
}

TEST_CASE("cart pole resets are seeded") {
  CartPoleEnv a, b;
  CHECK(a.reset(11) == b.reset(11));
  CHECK(a.reset(11) != a.reset(12));
  const auto obs = a.reset(13);
  for (double v : obs[0]) CHECK(std::abs(v) <= 0.05);
  CHECK(a.observation_dim() == 4);
  CHECK(a.action_dim() == 2);
}

TEST_CASE("wildfire reward at zero distance") {
  WildfireState s;
  s.drones = {Vec2{100, 100}, Vec2{400, 300}};
  s.fires = {Fire{{100, 100}, {0, 0}}, Fire{{400, 300}, {0, 0}}};
  CHECK(wildfire_reward(s) == 0.0);
  CHECK(wildfire_fire_distance(s) == 0.0);
}

TEST_CASE("wildfire reward at distance 250") {
  WildfireState s;
  s.drones = {Vec2{0, 0}, Vec2{500, 500}};
  s.fires = {Fire{{150, 200}, {0, 0}}, Fire{{500, 250}, {0, 0}}};
  CHECK(wildfire_reward(s) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(wildfire_fire_distance(s) == doctest::Approx(250.0));
}

TEST_CASE("wildfire observation signs") {
  WildfireState s;
  s.drones = {Vec2{200, 200}, Vec2{450, 50}};
  s.fires = {Fire{{150, 260}, {0, 0}}, Fire{{470, 20}, {0, 0}}};
  const auto o = wildfire_observation(s, 0);
  REQUIRE(o.size() == 6);
  CHECK(o[0] == doctest::Approx(60.0 / 500));  // fire 1 north of drone 0
  CHECK(o[1] == doctest::Approx(50.0 / 500));  // and west of it
  CHECK(o[2] < 0.0);                           // fire 2 south
  CHECK(o[3] < 0.0);                           // and east
  CHECK(o[4] == 1.0);
  CHECK(o[5] == 0.0);
  const auto p = wildfire_observation(s, 1);
  CHECK(p[4] == 0.0);
  CHECK(p[5] == 1.0);
}

TEST_CASE("drones move one stride and stay on the grid") {
  WildfireState s;
  s.drones = {Vec2{250, 250}, Vec2{2, 498}};
  s.fires = {Fire{{10, 10}, {0, 0}}, Fire{{20, 20}, {0, 0}}};
  std::mt19937_64 rng(1);
  const std::size_t ne[2] = {wildfire::kNorth, wildfire::kWest};
  auto n = wildfire_dynamics(s, ne, still(), rng);
  CHECK(n.drones[0] == Vec2{250, 255});
  CHECK(n.drones[1] == Vec2{0, 498});
  const std::size_t se[2] = {wildfire::kSouth, wildfire::kNorth};
  n = wildfire_dynamics(s, se, still(), rng);
  CHECK(n.drones[0] == Vec2{250, 245});
  CHECK(n.drones[1] == Vec2{2, 500});
  const std::size_t bad[2] = {0, 4};
  CHECK_THROWS_AS(wildfire_dynamics(s, bad, still(), rng), InvalidInput);
}

TEST_CASE("fires drift and reflect at the edge") {
  WildfireState s;
  s.drones = {Vec2{0, 0}, Vec2{0, 0}};
  s.fires = {Fire{{499, 250}, {2, 0}}, Fire{{1, 1}, {-1.5, -0.5}}};
  std::mt19937_64 rng(1);
  const std::size_t a[2] = {0, 0};
  const auto n = wildfire_dynamics(s, a, still(), rng);
  CHECK(n.fires[0].position.x == doctest::Approx(499.0));
  CHECK(n.fires[0].velocity.x == -2.0);
  CHECK(n.fires[1].position.x == doctest::Approx(0.5));
  CHECK(n.fires[1].position.y == doctest::Approx(0.5));
  CHECK(n.fires[1].velocity.x == 1.5);
}

TEST_CASE("wildfire episodes are seeded, bounded and last 300 steps") {
  WildfireEnv a, b;
  const auto oa = a.reset(21);
  CHECK(oa == b.reset(21));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<std::size_t> pick(0, 3);
  const double bound = 2.0 * std::sqrt(2.0);
  std::size_t steps = 0;
  bool done = false;
  while (!done) {
    const std::size_t acts[2] = {pick(rng), pick(rng)};
    const auto ra = a.step(acts);
    const auto rb = b.step(acts);
    CHECK(ra.observations == rb.observations);
    CHECK(ra.rewards == rb.rewards);
    CHECK(ra.rewards[0] == ra.rewards[1]);
    CHECK(ra.rewards[0] <= 0.0);
    CHECK(ra.rewards[0] >= -bound);
    for (const auto& o : ra.observations) {
      REQUIRE(o.size() == 6);
      for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(o[k]) <= 1.0);
    }
    for (const auto& f : a.state().fires) {
      CHECK(f.position.x >= 0.0);
      CHECK(f.position.x <= wildfire::kGridSize);
      CHECK(f.position.y >= 0.0);
      CHECK(f.position.y <= wildfire::kGridSize);
    }
    done = ra.done;
    ++steps;
  }
  CHECK(steps == wildfire::kMaxSteps);
  CHECK(a.observation_dim() == 6);
  CHECK(a.action_dim() == 4);
  CHECK(a.agent_count() == 2);
}

TEST_CASE("fire speed stays in range after reset") {
  WildfireEnv env;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    env.reset(seed);
    for (const auto& f : env.state().fires) {
      const double v = std::hypot(f.velocity.x, f.velocity.y);
      CHECK(v >= 0.5 - 1e-12);
      CHECK(v <= 2.0 + 1e-12);
    }
  }
}

TEST_CASE("multiagent run shares one policy and pools per-agent trajectories") {
  WildfireEnv env;
  std::size_t calls = 0;
  PolicyFn policy = [&](std::span<const double> obs, std::mt19937_64&) {
    ++calls;
    Decision d;
    // Head toward fire 1.
    d.action = std::abs(obs[0]) > std::abs(obs[1]) ? (obs[0] > 0 ? wildfire::kNorth : wildfire::kSouth)
                                                   : (obs[1] > 0 ? wildfire::kWest : wildfire::kEast);
    d.probs = {0.25, 0.25, 0.25, 0.25};
    return d;
  };
  std::mt19937_64 rng(0);
  const auto r = multiagent_run(policy, env, 5, rng);
  CHECK(calls == 2 * wildfire::kMaxSteps);
  REQUIRE(r.per_agent.size() == 2);
  CHECK(r.per_agent[0].transitions.size() == wildfire::kMaxSteps);
  CHECK(r.per_agent[1].transitions.size() == wildfire::kMaxSteps);
  CHECK(r.length == wildfire::kMaxSteps);
  double total = 0.0;
  for (const auto& t : r.per_agent[0].transitions) total += t.reward;
  CHECK(r.episode_reward == doctest::Approx(total));
  CHECK(r.mean_fire_distance > 0.0);

  std::mt19937_64 rng2(0);
  WildfireEnv again;
  const auto r2 = multiagent_run(policy, again, 5, rng2);
  CHECK(r2.episode_reward == r.episode_reward);
}
