#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "prolonet/agents.hpp"
#include "prolonet/train.hpp"
#include "test_support.hpp"

using namespace prolonet;

namespace {

Trajectory with_rewards(std::vector<double> rewards, std::vector<double> values = {}) {
  Trajectory t;
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    Transition tr;
    tr.reward = rewards[i];
    tr.value_estimate = values.empty() ? 0.0 : values[i];
    t.transitions.push_back(tr);
  }
  return t;
}

std::vector<double> random_probs(std::size_t k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::vector<double> z(k);
  for (auto& v : z) v = u(rng);
  return softmax(z);
}

// Loss as a function of logits, for finite-difference checks of grad_logits.
template <class F>
void check_logit_gradient(const std::vector<std::vector<double>>& logits, const LossOutput& out, F loss_of) {
  for (std::size_t i = 0; i < logits.size(); ++i) {
    for (std::size_t k = 0; k < logits[i].size(); ++k) {
      auto up = logits, down = logits;
      const double h = 1e-6;
      up[i][k] += h;
      down[i][k] -= h;
      const double fd = (loss_of(up) - loss_of(down)) / (2 * h);
      CHECK(oracle::close_rel(out.grad_logits[i][k], fd, 1e-5, 1e-8));
    }
  }
}

std::vector<std::vector<double>> softmax_all(const std::vector<std::vector<double>>& z) {
  std::vector<std::vector<double>> p;
  for (const auto& v : z) p.push_back(softmax(v));
  return p;
}

double params_distance(const Agent& a, const Agent& b) {
  const auto pa = parameters(a.actor_prolonet());
  const auto pb = parameters(b.actor_prolonet());
  if (pa.size() != pb.size()) return 1e300;
  double d = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) d += std::abs(pa[i] - pb[i]);
  return d;
}

}  // namespace

TEST_CASE("returns examples") {
  auto a = with_rewards({1, 1, 1});
  compute_returns_advantages(a, 0.0);
  CHECK(a.returns == std::vector<double>{1, 1, 1});

  auto b = with_rewards({0, 0, 1}, {0.1, 0.2, 0.3});
  compute_returns_advantages(b, 0.5);
  CHECK(b.returns == std::vector<double>{0.25, 0.5, 1.0});
  CHECK(b.advantages[0] == doctest::Approx(0.15));
  CHECK(b.advantages[2] == doctest::Approx(0.7));

  Trajectory empty;
  CHECK_THROWS_AS(compute_returns_advantages(empty, 0.9), InvalidInput);
}

TEST_CASE("returns match a double loop") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> r(10), v(10);
    for (auto& x : r) x = u(rng);
    for (auto& x : v) x = u(rng);
    auto t = with_rewards(r, v);
    const double g = 0.9;
    compute_returns_advantages(t, g);
    for (std::size_t i = 0; i < 10; ++i) {
      double expect = 0.0;
      for (std::size_t k = i; k < 10; ++k) expect += std::pow(g, double(k - i)) * r[k];
      CHECK(std::abs(t.returns[i] - expect) <= 1e-12);
      CHECK(std::abs(t.advantages[i] - (expect - v[i])) <= 1e-12);
    }
  }
}

TEST_CASE("ppo clip arithmetic") {
  const std::vector<double> old{0.4, 0.6};
  const std::vector<std::vector<double>> now{{0.6, 0.4}};
  const PolicySample s{0, old, 1.0};
  const auto out = ppo_clip_loss(std::span(&s, 1), now, 0.2);
  CHECK(out.loss == doctest::Approx(-1.2).epsilon(1e-12));  // min(1.5, 1.2)
  // Clipped branch active: no gradient.
  CHECK(out.grad_logits[0] == std::vector<double>{0.0, 0.0});

  const PolicySample neg{0, old, -1.0};
  const auto out2 = ppo_clip_loss(std::span(&neg, 1), now, 0.2);
  CHECK(out2.loss == doctest::Approx(1.5).epsilon(1e-12));  // min(-1.5, -1.2)
  CHECK(out2.grad_logits[0][0] != 0.0);
}

TEST_CASE("ppo at ratio one is the vanilla policy gradient") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<std::vector<double>> z(8);
  std::vector<std::vector<double>> p;
  std::vector<PolicySample> batch;
  for (auto& v : z) v = {u(rng), u(rng), u(rng)};
  p = softmax_all(z);
  for (std::size_t i = 0; i < z.size(); ++i) batch.push_back({i % 3, p[i], u(rng)});
  const auto out = ppo_clip_loss(batch, p, 0.2);
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t k = 0; k < 3; ++k) {
      const double vanilla = -batch[i].advantage * ((k == batch[i].action) - p[i][k]) / 8.0;
      CHECK(out.grad_logits[i][k] == doctest::Approx(vanilla).epsilon(1e-12));
    }
  }
}

TEST_CASE("ppo loss matches a straight-line evaluation") {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-2.0, 2.0), z(-1.0, 1.0);
  std::vector<std::vector<double>> olds, logits;
  std::vector<PolicySample> batch;
  for (int i = 0; i < 16; ++i) {
    olds.push_back(random_probs(4, rng));
    logits.push_back({z(rng), z(rng), z(rng), z(rng)});
  }
  for (int i = 0; i < 16; ++i) batch.push_back({std::size_t(i % 4), olds[i], u(rng)});
  const auto news = softmax_all(logits);
  const auto out = ppo_clip_loss(batch, news, 0.2);

  double expect = 0.0;
  for (int i = 0; i < 16; ++i) {
    const double r = news[i][i % 4] / olds[i][i % 4];
    const double a = batch[i].advantage;
    double clipped = r;
    if (clipped < 0.8) clipped = 0.8;
    if (clipped > 1.2) clipped = 1.2;
    const double obj = r * a < clipped * a ? r * a : clipped * a;
    expect += -obj;
  }
  expect /= 16.0;
  CHECK(std::abs(out.loss - expect) <= 1e-12);
  check_logit_gradient(logits, out, [&](const std::vector<std::vector<double>>& zz) {
    return ppo_clip_loss(batch, softmax_all(zz), 0.2).loss;
  });
}

TEST_CASE("kl-scaled loss examples") {
  const std::vector<double> old{0.5, 0.5};
  const std::vector<std::vector<double>> now{{0.8, 0.2}};
  CHECK(kl_divergence(now[0], old) == doctest::Approx(0.8 * std::log(1.6) + 0.2 * std::log(0.4)).epsilon(1e-14));
  CHECK(kl_divergence(now[0], old) == doctest::Approx(0.19274).epsilon(1e-4));
  const PolicySample s{0, old, 1.0};
  const auto out = kl_scaled_loss(std::span(&s, 1), now);
  CHECK(-out.loss == doctest::Approx(std::log(0.8) / 0.19274).epsilon(1e-4));
  CHECK(-out.loss == doctest::Approx(-1.1577).epsilon(1e-4));

  const std::vector<std::vector<double>> same{{0.5, 0.5}};
  const auto floor = kl_scaled_loss(std::span(&s, 1), same);
  CHECK(-floor.loss == doctest::Approx(std::log(0.5) / kKlFloor).epsilon(1e-12));

  const PolicySample zero{1, old, 0.0};
  const auto none = kl_scaled_loss(std::span(&zero, 1), now);
  CHECK(none.loss == 0.0);
  CHECK(none.grad_logits[0] == std::vector<double>{0.0, 0.0});
}

TEST_CASE("kl-scaled gradient matches finite differences") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-2.0, 2.0), z(-1.0, 1.0);
  std::vector<std::vector<double>> olds, logits;
  std::vector<PolicySample> batch;
  for (int i = 0; i < 12; ++i) {
    olds.push_back(random_probs(3, rng));
    logits.push_back({z(rng), z(rng), z(rng)});
  }
  for (int i = 0; i < 12; ++i) batch.push_back({std::size_t(i % 3), olds[i], u(rng)});
  const auto out = kl_scaled_loss(batch, softmax_all(logits));
  CHECK(out.skipped == 0);
  check_logit_gradient(logits, out, [&](const std::vector<std::vector<double>>& zz) {
    return kl_scaled_loss(batch, softmax_all(zz)).loss;
  });
}

TEST_CASE("kl-scaled loss skips non-finite samples") {
  const std::vector<double> old{1.0, 0.0};
  const std::vector<std::vector<double>> now{{0.5, 0.5}};
  const PolicySample s{0, old, 1.0};
  const auto out = kl_scaled_loss(std::span(&s, 1), now);
  CHECK(out.skipped == 1);
  CHECK(out.loss == 0.0);
}

TEST_CASE("imitation loss on a confident correct state") {
  const std::vector<std::size_t> expert{1};
  const std::vector<std::vector<double>> p{{0.005, 0.995}};
  const auto out = imitation_loss(expert, p);
  CHECK(out.loss < 0.01);
  CHECK(out.loss == doctest::Approx(-std::log(0.995)));
  std::vector<std::vector<double>> z{{0.3, -0.7, 1.1}};
  const std::vector<std::size_t> e2{2};
  const auto o2 = imitation_loss(e2, softmax_all(z));
  check_logit_gradient(z, o2, [&](const std::vector<std::vector<double>>& zz) { return imitation_loss(e2, softmax_all(zz)).loss; });
}

TEST_CASE("critic loss uses the chosen action's output") {
  const std::vector<std::size_t> actions{1, 0};
  const std::vector<std::vector<double>> out{{5.0, 2.0}, {1.0, 9.0}};
  const std::vector<double> targets{3.0, 4.0};
  const auto l = critic_loss(actions, out, targets);
  CHECK(l.loss == doctest::Approx((1.0 + 9.0) / 2.0));
  CHECK(l.grad_logits[0] == std::vector<double>{0.0, -1.0});
  CHECK(l.grad_logits[1] == std::vector<double>{-3.0, 0.0});
}

TEST_CASE("rmsprop examples") {
  RmsPropState s;
  std::vector<double> p{0.0};
  const std::vector<double> g{1.0};
  rmsprop_step(p, g, s, 0.01);
  CHECK(s.mean_square[0] == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(p[0] == doctest::Approx(-0.01 / (0.1 + 1e-8)).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(-0.09999).epsilon(1e-4));

  const double before = p[0];
  const std::vector<double> zero{0.0};
  rmsprop_step(p, zero, s, 0.01);
  CHECK(p[0] == before);
  CHECK(s.mean_square[0] == doctest::Approx(0.0099).epsilon(1e-14));

  RmsPropState a, b;
  std::vector<double> pa{1, 2, 3}, pb{1, 2, 3};
  const std::vector<double> gg{0.3, -0.2, 0.0};
  for (int i = 0; i < 5; ++i) {
    rmsprop_step(pa, gg, a, 0.05);
    rmsprop_step(pb, gg, b, 0.05);
  }
  CHECK(pa == pb);
  CHECK_THROWS_AS(rmsprop_step(pa, std::vector<double>{1.0}, a, 0.1), InvalidInput);
}

TEST_CASE("loki schedule switches at n") {
  TrainerConfig cfg;
  CHECK(loki_schedule(0, cfg) == UpdateMode::PolicyGradient);
  cfg.loki_n = 200;
  CHECK(loki_schedule(199, cfg) == UpdateMode::Imitation);
  CHECK(loki_schedule(200, cfg) == UpdateMode::PolicyGradient);
}

TEST_CASE("trainer config json round trip and validation") {
  TrainerConfig cfg;
  cfg.learning_rate = 0.003;
  cfg.loss = LossVariant::KlScaled;
  cfg.growth_config.epsilon = std::numeric_limits<double>::infinity();
  cfg.growth_config.aggregation = ChildAggregation::Sum;
  cfg.critic_target = CriticTarget::Reward;
  cfg.batch_cap = 32;
  const auto doc = to_json(cfg);
  const auto back = trainer_config_from_json(doc);
  CHECK(to_json(back) == doc);
  CHECK(std::isinf(back.growth_config.epsilon));
  CHECK(back.loss == LossVariant::KlScaled);
  CHECK_THROWS_AS(trainer_config_from_json({{"learning_rat", 0.1}}), InvalidInput);
  CHECK_THROWS_AS(trainer_config_from_json({{"learning_rate", -1.0}}), InvalidInput);
  CHECK_THROWS_AS(trainer_config_from_json({{"epochs", 0}}), InvalidInput);
  CHECK_THROWS_AS(trainer_config_from_json({{"loss", "adam"}}), InvalidInput);
}

TEST_CASE("fresh prolonet critic is a copy of the actor") {
  for (auto kind : {AgentKind::ProLoNetInit, AgentKind::ProLoNetRandom}) {
    const auto agent = build_agent(kind, Domain::CartPole, std::nullopt, 3);
    const auto& critic = std::get<ProLoNet>(*agent.critic);
    const auto d = divergence(agent.actor_prolonet(), critic);
    CHECK(d.mse_weights == 0.0);
    CHECK(d.mse_comparators == 0.0);
    CHECK(d.mse_leaves == 0.0);
  }
}

TEST_CASE("divergence arithmetic") {
  auto init = random_prolonet(3, 4, 2, 2, 6);
  for (auto& n : init.nodes) n.comparator = 0.0;
  init.nodes[1].comparator = 2.0;
  auto cur = init;
  cur.nodes[1].comparator = -2.0;
  auto d = divergence(init, cur);
  CHECK(d.mse_comparators == 4.0 * 4.0 / 3.0);

  auto four = random_prolonet(4, 5, 2, 2, 6);
  four.nodes[2].comparator = 2.0;
  auto neg = four;
  neg.nodes[2].comparator = -2.0;
  d = divergence(four, neg);
  CHECK(d.mse_comparators == 4.0);
  CHECK(d.mse_weights == 0.0);
  CHECK(d.mse_leaves == 0.0);

  // Grown networks are compared over the original nodes and leaves only.
  GrowthPair pair(four, 1);
  auto grown = pair.deep();
  grown.nodes[0].weights[0] += 1.0;
  d = divergence(four, grown);
  CHECK(d.mse_weights == doctest::Approx(1.0 / 8.0));
  CHECK_THROWS_AS(divergence(grown, four), InvalidInput);
}

TEST_CASE("zero learning rate leaves parameters untouched") {
  auto agent = build_agent(AgentKind::ProLoNetInit, Domain::CartPole, std::nullopt, 5);
  const Agent before = agent;
  TrainerConfig cfg;
  cfg.learning_rate = 0.0;
  CartPoleEnv env;
  const auto m = train_episode_loop(agent, env, cfg, 5, 9);
  CHECK(m.size() == 5);
  CHECK(agent.actor_prolonet() == before.actor_prolonet());
  CHECK(agent.prolonet->deep() == before.prolonet->deep());
  CHECK(std::get<ProLoNet>(*agent.critic) == std::get<ProLoNet>(*before.critic));
}

TEST_CASE("training is deterministic and moves parameters") {
  CartPoleEnv env;
  TrainerConfig cfg;
  auto a = build_agent(AgentKind::ProLoNetInit, Domain::CartPole, std::nullopt, 5);
  auto b = build_agent(AgentKind::ProLoNetInit, Domain::CartPole, std::nullopt, 5);
  const Agent init = a;
  const auto ma = train_episode_loop(a, env, cfg, 8, 21);
  const auto mb = train_episode_loop(b, env, cfg, 8, 21);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    CHECK(ma[i].reward == mb[i].reward);
    CHECK(ma[i].loss == mb[i].loss);
  }
  CHECK(a.actor_prolonet() == b.actor_prolonet());
  CHECK(params_distance(a, init) > 0.0);
  const auto d = divergence(init.actor_prolonet(), a.actor_prolonet());
  CHECK(d.mse_weights >= 0.0);
  CHECK(d.mse_comparators + d.mse_weights + d.mse_leaves > 0.0);

  // Multiple workers pool episodes and are deterministic too.
  cfg.workers = 3;
  auto c = build_agent(AgentKind::ProLoNetInit, Domain::CartPole, std::nullopt, 5);
  auto e = build_agent(AgentKind::ProLoNetInit, Domain::CartPole, std::nullopt, 5);
  const auto mc = train_episode_loop(c, env, cfg, 3, 21);
  const auto me = train_episode_loop(e, env, cfg, 3, 21);
  for (std::size_t i = 0; i < mc.size(); ++i) CHECK(mc[i].reward == me[i].reward);
  CHECK(c.actor_prolonet() == e.actor_prolonet());
}

TEST_CASE("ppo uses the stored behavior distribution") {
  // One sample whose stored old distribution differs from the current one:
  // the ratio must use the stored value.
  const std::vector<double> stored{0.25, 0.75};
  const std::vector<std::vector<double>> now{{0.3, 0.7}};
  const PolicySample s{0, stored, 1.0};
  const auto out = ppo_clip_loss(std::span(&s, 1), now, 0.5);
  CHECK(out.loss == doctest::Approx(-0.3 / 0.25));
}

TEST_CASE("wildfire training pools both drones") {
  WildfireEnv env;
  auto agent = build_agent(AgentKind::ProLoNetInit, Domain::Wildfire, std::nullopt, 2);
  TrainerConfig cfg;
  cfg.epochs = 1;
  const auto m = train_episode_loop(agent, env, cfg, 2, 3);
  CHECK(m[0].length == double(wildfire::kMaxSteps));
  CHECK(m[0].reward < 0.0);
  CHECK(m[0].mean_fire_distance > 0.0);
}

TEST_CASE("heuristic agents never learn") {
  auto agent = build_agent(AgentKind::Heuristic, Domain::CartPole, std::nullopt, 1);
  CartPoleEnv env;
  const auto m = train_episode_loop(agent, env, {}, 3, 1);
  for (const auto& e : m) CHECK(e.loss == 0.0);
}

TEST_CASE("loki imitation reduces cross-entropy to the tree") {
  CartPoleEnv env;
  const auto tree = default_tree(Domain::CartPole);
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  std::vector<std::vector<double>> held;
  for (int i = 0; i < 300; ++i) held.push_back({u(rng), u(rng), u(rng), u(rng)});
  auto ce = [&](const Agent& a) {
    double total = 0.0;
    for (const auto& x : held) total -= std::log(a.probs(x)[heuristic_act(tree, x)]);
    return total / double(held.size());
  };
  TrainerConfig cfg;
  cfg.loki_n = 15;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto agent = build_agent(AgentKind::Loki, Domain::CartPole, std::nullopt, seed);
    const double start = ce(agent);
    const auto m = train_episode_loop(agent, env, cfg, 15, seed);
    for (const auto& e : m) CHECK(e.mode == UpdateMode::Imitation);
    CHECK(ce(agent) < start);
  }
}

TEST_CASE("growth carries optimizer state and keeps the pair in sync") {
  WildfireEnv env;
  auto agent = build_agent(AgentKind::ProLoNetRandom, Domain::Wildfire, std::nullopt, 4);
  TrainerConfig cfg;
  cfg.epochs = 1;
  cfg.growth_config.epsilon = 0.0;
  Trainer trainer(agent, env, cfg, 8);
  std::size_t grown = 0;
  for (int i = 0; i < 10; ++i) {
    const auto m = trainer.run_episode();
    grown += m.growth_events.size();
    CHECK(agent.prolonet->in_sync());
    const auto state = trainer.optimizer_state();
    CHECK(state["actor"]["mean_square"].size() == parameter_count(agent.prolonet->shallow()));
    CHECK(state["deep"]["mean_square"].size() == parameter_count(agent.prolonet->deep()));
  }
  CHECK(grown > 0);
}

TEST_CASE("advantage baseline averages the critic under the policy") {
  auto agent = build_agent(AgentKind::ProLoNetInit, Domain::CartPole, std::nullopt, 5);
  const std::vector<double> x{0.01, -0.2, 0.03, 0.1};
  const auto p = agent.probs(x);
  const double expect = p[0] * agent.value(x, 0) + p[1] * agent.value(x, 1);
  CHECK(agent.state_value(x, p) == doctest::Approx(expect).epsilon(1e-14));
  std::mt19937_64 rng(1);
  const auto d = agent.act(x, rng);
  CHECK(d.value == doctest::Approx(expect).epsilon(1e-14));
  const auto h = build_agent(AgentKind::Heuristic, Domain::CartPole, std::nullopt, 5);
  CHECK(h.state_value(x, h.probs(x)) == 0.0);
}

TEST_CASE("rollback restores parameters when the probe drops") {
  CartPoleEnv env;
  auto agent = build_agent(AgentKind::ProLoNetInit, Domain::CartPole, std::nullopt, 5);
  TrainerConfig cfg;
  cfg.rollback = true;
  cfg.rollback_probes = 3;
  cfg.learning_rate = 5.0;  // large enough to wreck the policy
  cfg.growth = false;
  Trainer trainer(agent, env, cfg, 1);
  std::size_t rolled = 0;
  for (int i = 0; i < 4; ++i) {
    const Agent before = agent;
    const auto m = trainer.run_episode();
    if (m.rolled_back) {
      ++rolled;
      CHECK(agent.actor_prolonet() == before.actor_prolonet());
    }
  }
  CHECK(rolled > 0);
}

TEST_CASE("agent construction") {
  const auto mlp = build_agent(AgentKind::Mlp, Domain::CartPole, std::nullopt, 1);
  REQUIRE(mlp.mlp->layers.size() == 3);
  CHECK(mlp.mlp->layers[0].in == 4);
  CHECK(mlp.mlp->layers[0].out == 4);
  CHECK(mlp.mlp->layers[1].out == 4);
  CHECK(mlp.mlp->layers[2].out == 2);
  const auto fire = build_agent(AgentKind::Mlp, Domain::Wildfire, std::nullopt, 1);
  CHECK(fire.mlp->layers[0].in == 6);
  CHECK(fire.mlp->layers[1].out == 6);
  CHECK(fire.mlp->layers[2].out == 4);

  const auto tree = parse_domain_tree(Domain::CartPole, "if x_position > 0 then left else right");
  const auto h = build_agent(AgentKind::Heuristic, Domain::CartPole, tree, 1);
  std::mt19937_64 rng(1);
  const std::vector<double> x{2, 1, 0, 3};
  for (int i = 0; i < 10; ++i) CHECK(h.act(x, rng).action == 0);
  CHECK(h.probs(x) == std::vector<double>{1.0, 0.0});

  const auto r1 = build_agent(AgentKind::ProLoNetRandom, Domain::CartPole, std::nullopt, 9);
  const auto r2 = build_agent(AgentKind::ProLoNetRandom, Domain::CartPole, std::nullopt, 9);
  CHECK(r1.actor_prolonet() == r2.actor_prolonet());
  CHECK(r1.prolonet->deep() == r2.prolonet->deep());
  const auto r3 = build_agent(AgentKind::ProLoNetRandom, Domain::CartPole, std::nullopt, 10);
  CHECK(r1.actor_prolonet() != r3.actor_prolonet());
  CHECK(r1.actor_prolonet().nodes.size() == default_tree(Domain::CartPole).check_count());

  CHECK(parse_agent_kind("random_prolonet") == AgentKind::ProLoNetRandom);
  CHECK_THROWS_AS(parse_agent_kind("lstm"), InvalidInput);
}

TEST_CASE("sharp compiled agent agrees with the heuristic") {
  for (Domain d : {Domain::CartPole, Domain::Wildfire}) {
    auto agent = build_agent(AgentKind::ProLoNetInit, d, std::nullopt, 1);
    for (auto& n : agent.prolonet->shallow().nodes) n.alpha = 1000.0;
    const auto& tree = *agent.tree;
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    std::bernoulli_distribution coin(0.5);
    const std::size_t dim = domain_info(d).feature_names.size();
    std::size_t agree = 0, counted = 0;
    for (int i = 0; i < 10000; ++i) {
      std::vector<double> x(dim);
      for (auto& v : x) v = u(rng);
      if (d == Domain::Wildfire) {
        x[4] = coin(rng);
        x[5] = 1.0 - x[4];
      }
      ++counted;
      if (agent.greedy_action(x) == heuristic_act(tree, x)) ++agree;
      else CHECK(oracle::route_margin(tree, x) < 1e-3);
    }
    CHECK(double(agree) / double(counted) >= 0.999);
  }
}

TEST_CASE("sampled actions follow the distribution") {
  std::mt19937_64 rng(5);
  const std::vector<double> p{0.1, 0.0, 0.6, 0.3};
  std::vector<int> counts(4, 0);
  for (int i = 0; i < 20000; ++i) ++counts[sample_action(p, rng)];
  CHECK(counts[1] == 0);
  CHECK(counts[0] / 20000.0 == doctest::Approx(0.1).epsilon(0.1));
  CHECK(counts[2] / 20000.0 == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("actor json round trip") {
  for (auto kind : {AgentKind::ProLoNetInit, AgentKind::Mlp, AgentKind::Heuristic}) {
    const auto a = build_agent(kind, Domain::Wildfire, std::nullopt, 2);
    const auto b = agent_from_json(actor_to_json(a), Domain::Wildfire);
    const std::vector<double> x{0.1, -0.2, 0.3, 0.05, 1, 0};
    CHECK(a.probs(x) == b.probs(x));
  }
  const auto a = build_agent(AgentKind::ProLoNetInit, Domain::Wildfire, std::nullopt, 2);
  CHECK_THROWS_AS(agent_from_json(actor_to_json(a), Domain::CartPole), InvalidInput);
  CHECK_THROWS_AS(agent_from_json({{"format", "nope"}}, Domain::CartPole), InvalidInput);
}
