#include "prolonet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include "prolonet/model_io.hpp"

namespace prolonet {

std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto splitmix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return splitmix(splitmix(splitmix(base) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

void compute_returns_advantages(Trajectory& traj, double discount) {
  const std::size_t n = traj.transitions.size();
  if (n == 0) throw InvalidInput("cannot compute returns for an empty trajectory");
  traj.returns.assign(n, 0.0);
  traj.advantages.assign(n, 0.0);
  double running = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    running = traj.transitions[t].reward + discount * running;
    traj.returns[t] = running;
    traj.advantages[t] = running - traj.transitions[t].value_estimate;
  }
}

namespace {

void check_batch(std::size_t batch, std::size_t outputs) {
  if (batch != outputs) throw InvalidInput("batch and output counts differ");
}

}  // namespace

LossOutput ppo_clip_loss(std::span<const PolicySample> batch, std::span<const std::vector<double>> new_probs,
                         double clip) {
  check_batch(batch.size(), new_probs.size());
  LossOutput out;
  out.grad_logits.resize(batch.size());
  if (batch.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const auto& p = new_probs[i];
    out.grad_logits[i].assign(p.size(), 0.0);
    const double ratio = p.at(s.action) / s.old_probs[s.action];
    const double unclipped = ratio * s.advantage;
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * s.advantage;
    out.loss -= std::min(unclipped, clipped) * inv_b;
    if (unclipped <= clipped) {
      for (std::size_t k = 0; k < p.size(); ++k) {
        const double dlog = (k == s.action ? 1.0 : 0.0) - p[k];
        out.grad_logits[i][k] = -inv_b * s.advantage * ratio * dlog;
      }
    }
  }
  return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    kl += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return kl;
}

LossOutput kl_scaled_loss(std::span<const PolicySample> batch, std::span<const std::vector<double>> new_probs) {
  check_batch(batch.size(), new_probs.size());
  LossOutput out;
  out.grad_logits.resize(batch.size());
  if (batch.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& s = batch[i];
    const auto& p = new_probs[i];
    out.grad_logits[i].assign(p.size(), 0.0);
    const double kl = kl_divergence(p, s.old_probs);
    const double logp = std::log(p.at(s.action));
    if (!std::isfinite(kl) || !std::isfinite(logp)) {
      ++out.skipped;
      continue;
    }
    const bool floored = kl < kKlFloor;
    const double denom = floored ? kKlFloor : kl;
    const double objective = s.advantage * logp / denom;
    out.loss -= objective * inv_b;
    for (std::size_t k = 0; k < p.size(); ++k) {
      double g = s.advantage * ((k == s.action ? 1.0 : 0.0) - p[k]) / denom;
      if (!floored && p[k] > 0.0) {
        const double dkl = p[k] * ((std::log(p[k]) - std::log(s.old_probs[k])) - kl);
        g -= s.advantage * logp * dkl / (denom * denom);
      }
      out.grad_logits[i][k] = -inv_b * g;
    }
  }
  return out;
}

LossOutput imitation_loss(std::span<const std::size_t> expert_actions, std::span<const std::vector<double>> new_probs) {
  check_batch(expert_actions.size(), new_probs.size());
  LossOutput out;
  out.grad_logits.resize(expert_actions.size());
  if (expert_actions.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(expert_actions.size());
  for (std::size_t i = 0; i < expert_actions.size(); ++i) {
    const auto& p = new_probs[i];
    const std::size_t e = expert_actions[i];
    out.loss -= std::log(std::max(p.at(e), std::numeric_limits<double>::min())) * inv_b;
    out.grad_logits[i].resize(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) out.grad_logits[i][k] = inv_b * (p[k] - (k == e ? 1.0 : 0.0));
  }
  return out;
}

LossOutput critic_loss(std::span<const std::size_t> actions, std::span<const std::vector<double>> outputs,
                       std::span<const double> targets) {
  check_batch(actions.size(), outputs.size());
  check_batch(actions.size(), targets.size());
  LossOutput out;
  out.grad_logits.resize(actions.size());
  if (actions.empty()) return out;
  const double inv_b = 1.0 / static_cast<double>(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double diff = outputs[i].at(actions[i]) - targets[i];
    out.loss += diff * diff * inv_b;
    out.grad_logits[i].assign(outputs[i].size(), 0.0);
    out.grad_logits[i][actions[i]] = 2.0 * diff * inv_b;
  }
  return out;
}

void rmsprop_step(std::span<double> params, std::span<const double> grads, RmsPropState& state, double lr) {
  if (params.size() != grads.size()) throw InvalidInput("parameter and gradient sizes differ");
  if (state.mean_square.size() != params.size()) state.mean_square.assign(params.size(), 0.0);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& v = state.mean_square[i];
    v = state.decay * v + (1.0 - state.decay) * grads[i] * grads[i];
    params[i] -= lr * grads[i] / (std::sqrt(v) + state.eps);
  }
}

// ---------------------------------------------------------------------------

LossVariant parse_loss_variant(std::string_view name) {
  if (name == "clip" || name == "ppo_clip") return LossVariant::PpoClip;
  if (name == "kl" || name == "kl_scaled") return LossVariant::KlScaled;
  throw InvalidInput("unknown loss '" + std::string(name) + "' (expected clip or kl)");
}

std::string to_string(LossVariant v) { return v == LossVariant::PpoClip ? "clip" : "kl"; }
std::string to_string(UpdateMode m) { return m == UpdateMode::Imitation ? "imitation" : "policy_gradient"; }

void TrainerConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw InvalidInput("learning_rate must be >= 0");
  if (!(discount >= 0.0 && discount <= 1.0)) throw InvalidInput("discount must be in [0, 1]");
  if (!(ppo_clip > 0.0 && ppo_clip < 1.0)) throw InvalidInput("ppo_clip must be in (0, 1)");
  if (epochs == 0) throw InvalidInput("epochs must be positive");
  if (workers == 0) throw InvalidInput("workers must be positive");
  if (rollback && rollback_probes == 0) throw InvalidInput("rollback_probes must be positive");
  if (!(rollback_tolerance >= 0.0)) throw InvalidInput("rollback_tolerance must be >= 0");
  if (std::isnan(growth_config.epsilon)) throw InvalidInput("epsilon must be a number");
}

namespace {

std::string entropy_name(EntropyMode m) {
  switch (m) {
    case EntropyMode::Auto: return "auto";
    case EntropyMode::Softmax: return "softmax";
    case EntropyMode::Direct: return "direct";
  }
  return "auto";
}

EntropyMode parse_entropy(const std::string& s) {
  if (s == "auto") return EntropyMode::Auto;
  if (s == "softmax") return EntropyMode::Softmax;
  if (s == "direct") return EntropyMode::Direct;
  throw InvalidInput("unknown entropy_mode '" + s + "'");
}

}  // namespace

nlohmann::json to_json(const TrainerConfig& cfg) {
  nlohmann::json eps = cfg.growth_config.epsilon;
  if (std::isinf(cfg.growth_config.epsilon)) eps = "inf";
  return {{"learning_rate", cfg.learning_rate},
          {"discount", cfg.discount},
          {"ppo_clip", cfg.ppo_clip},
          {"epochs", cfg.epochs},
          {"batch_cap", cfg.batch_cap},
          {"loss", to_string(cfg.loss)},
          {"loki_n", cfg.loki_n},
          {"rollback", cfg.rollback},
          {"rollback_probes", cfg.rollback_probes},
          {"rollback_tolerance", cfg.rollback_tolerance},
          {"growth", cfg.growth},
          {"epsilon", eps},
          {"entropy_mode", entropy_name(cfg.growth_config.entropy)},
          {"child_aggregation", cfg.growth_config.aggregation == ChildAggregation::Mean ? "mean" : "sum"},
          {"critic_target", cfg.critic_target == CriticTarget::Return ? "return" : "reward"},
          {"normalize_advantages", cfg.normalize_advantages},
          {"workers", cfg.workers}};
}

TrainerConfig trainer_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw InvalidInput("trainer config must be a JSON object");
  TrainerConfig cfg;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "learning_rate") cfg.learning_rate = value.get<double>();
      else if (key == "discount") cfg.discount = value.get<double>();
      else if (key == "ppo_clip") cfg.ppo_clip = value.get<double>();
      else if (key == "epochs") cfg.epochs = json_count(value, key);
      else if (key == "batch_cap") cfg.batch_cap = json_count(value, key);
      else if (key == "loss") cfg.loss = parse_loss_variant(value.get<std::string>());
      else if (key == "loki_n") cfg.loki_n = json_count(value, key);
      else if (key == "rollback") cfg.rollback = value.get<bool>();
      else if (key == "rollback_probes") cfg.rollback_probes = json_count(value, key);
      else if (key == "rollback_tolerance") cfg.rollback_tolerance = value.get<double>();
      else if (key == "growth") cfg.growth = value.get<bool>();
      else if (key == "epsilon") {
        if (value.is_string() && value.get<std::string>() == "inf") {
          cfg.growth_config.epsilon = std::numeric_limits<double>::infinity();
        } else {
          cfg.growth_config.epsilon = value.get<double>();
        }
      } else if (key == "entropy_mode") cfg.growth_config.entropy = parse_entropy(value.get<std::string>());
      else if (key == "child_aggregation") {
        const auto s = value.get<std::string>();
        if (s == "mean") cfg.growth_config.aggregation = ChildAggregation::Mean;
        else if (s == "sum") cfg.growth_config.aggregation = ChildAggregation::Sum;
        else throw InvalidInput("unknown child_aggregation '" + s + "'");
      } else if (key == "critic_target") {
        const auto s = value.get<std::string>();
        if (s == "return") cfg.critic_target = CriticTarget::Return;
        else if (s == "reward") cfg.critic_target = CriticTarget::Reward;
        else throw InvalidInput("unknown critic_target '" + s + "'");
      } else if (key == "normalize_advantages") cfg.normalize_advantages = value.get<bool>();
      else if (key == "workers") cfg.workers = json_count(value, key);
      else throw InvalidInput("unknown trainer setting '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad trainer setting: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

UpdateMode loki_schedule(std::size_t episode, const TrainerConfig& cfg) {
  return episode < cfg.loki_n ? UpdateMode::Imitation : UpdateMode::PolicyGradient;
}

nlohmann::json to_json(const EpisodeMetrics& m) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : m.growth_events) events.push_back(to_json(e, m.episode));
  return {{"episode", m.episode},
          {"reward", m.reward},
          {"length", m.length},
          {"loss", m.loss},
          {"mean_fire_distance", m.mean_fire_distance},
          {"mode", to_string(m.mode)},
          {"rolled_back", m.rolled_back},
          {"aborted", m.aborted},
          {"skipped_samples", m.skipped_samples},
          {"growth_events", std::move(events)}};
}

// ---------------------------------------------------------------------------

struct Trainer::Snapshot {
  Agent agent;
  RmsPropState actor, deep, critic;
};

Trainer::Trainer(Agent& agent, const Env& env_prototype, TrainerConfig cfg, std::uint64_t seed)
    : agent_(agent), env_(env_prototype.clone()), cfg_(cfg), seed_(seed), shuffle_rng_(mix_seed(seed, 0x5u)) {
  cfg_.validate();
  if (agent_.prolonet) agent_.prolonet->set_epsilon(cfg_.growth_config.epsilon);
  if (!cfg_.growth) agent_.growth = false;
}

std::vector<Rollout> Trainer::collect(std::size_t episode) {
  std::vector<Rollout> rollouts(cfg_.workers);
  const Agent& agent = agent_;
  auto policy = [&agent](std::span<const double> obs, std::mt19937_64& rng) { return agent.act(obs, rng); };
  auto run = [&](std::size_t w, Env& env) {
    std::mt19937_64 rng(mix_seed(seed_, episode, 2 * w + 1));
    rollouts[w] = multiagent_run(policy, env, mix_seed(seed_, episode, 2 * w + 2), rng);
  };
  if (cfg_.workers == 1) {
    run(0, *env_);
    return rollouts;
  }
  std::vector<std::unique_ptr<Env>> envs;
  for (std::size_t w = 0; w < cfg_.workers; ++w) envs.push_back(env_->clone());
  std::vector<std::exception_ptr> errors(cfg_.workers);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < cfg_.workers; ++w) {
    threads.emplace_back([&, w] {
      try {
        run(w, *envs[w]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return rollouts;
}

Trainer::Buffer Trainer::build_buffer(std::vector<Rollout>& rollouts) const {
  Buffer buf;
  for (auto& r : rollouts) {
    for (auto& traj : r.per_agent) {
      if (traj.transitions.empty()) continue;
      compute_returns_advantages(traj, cfg_.discount);
      for (std::size_t t = 0; t < traj.transitions.size(); ++t) {
        buf.samples.push_back(&traj.transitions[t]);
        buf.advantages.push_back(traj.advantages[t]);
        buf.targets.push_back(cfg_.critic_target == CriticTarget::Return ? traj.returns[t]
                                                                          : traj.transitions[t].reward);
      }
    }
  }
  if (cfg_.normalize_advantages && buf.advantages.size() > 1) {
    const double n = static_cast<double>(buf.advantages.size());
    const double mean = std::accumulate(buf.advantages.begin(), buf.advantages.end(), 0.0) / n;
    double var = 0.0;
    for (double a : buf.advantages) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / n);
    for (double& a : buf.advantages) a = (a - mean) / (sd + 1e-8);
  }
  return buf;
}

namespace {

template <class Net>
void descend(Net& net, RmsPropState& opt, double lr, std::span<const Transition* const> chunk,
             const LossOutput& loss) {
  std::vector<double> grad(parameter_count(net), 0.0);
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    const auto& g = loss.grad_logits[i];
    if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
    const auto gi = flat_gradient(net, chunk[i]->state, g);
    for (std::size_t k = 0; k < grad.size(); ++k) grad[k] += gi[k];
  }
  auto params = parameters(net);
  rmsprop_step(params, grad, opt, lr);
  set_parameters(net, params);
}

template <class Net>
double policy_step(Net& net, RmsPropState& opt, const TrainerConfig& cfg, UpdateMode mode,
                   std::span<const Transition* const> chunk, std::span<const double> advantages,
                   std::size_t& skipped) {
  std::vector<std::vector<double>> probs;
  probs.reserve(chunk.size());
  for (const auto* t : chunk) probs.push_back(softmax(logits(net, t->state)));
  LossOutput loss;
  if (mode == UpdateMode::Imitation) {
    std::vector<std::size_t> expert;
    for (const auto* t : chunk) expert.push_back(t->expert_action.value_or(t->action));
    loss = imitation_loss(expert, probs);
  } else {
    std::vector<PolicySample> batch;
    batch.reserve(chunk.size());
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      const auto* t = chunk[i];
      batch.push_back({t->action, t->action_probs, advantages[i]});
    }
    loss = cfg.loss == LossVariant::PpoClip ? ppo_clip_loss(batch, probs, cfg.ppo_clip) : kl_scaled_loss(batch, probs);
  }
  skipped += loss.skipped;
  descend(net, opt, cfg.learning_rate, chunk, loss);
  return loss.loss;
}

template <class Net>
void critic_step(Net& net, RmsPropState& opt, double lr, std::span<const Transition* const> chunk,
                 std::span<const double> targets) {
  std::vector<std::vector<double>> outputs;
  std::vector<std::size_t> actions;
  for (const auto* t : chunk) {
    outputs.push_back(logits(net, t->state));
    actions.push_back(t->action);
  }
  descend(net, opt, lr, chunk, critic_loss(actions, outputs, targets));
}

}  // namespace

double Trainer::update(const Buffer& buffer, UpdateMode mode, std::size_t& skipped) {
  const std::size_t n = buffer.samples.size();
  if (n == 0) return 0.0;
  const std::size_t b = cfg_.batch_cap == 0 ? n : std::min(n, cfg_.batch_cap);
  const bool train_deep = agent_.prolonet && agent_.growth && mode == UpdateMode::PolicyGradient;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  double loss_total = 0.0;
  std::size_t steps = 0;
  std::vector<const Transition*> chunk;
  std::vector<double> adv, target;
  for (std::size_t epoch = 0; epoch < cfg_.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng_);
    for (std::size_t start = 0; start < n; start += b) {
      const std::size_t stop = std::min(n, start + b);
      chunk.clear();
      adv.clear();
      target.clear();
      for (std::size_t i = start; i < stop; ++i) {
        chunk.push_back(buffer.samples[order[i]]);
        adv.push_back(buffer.advantages[order[i]]);
        target.push_back(buffer.targets[order[i]]);
      }
      if (agent_.prolonet) {
        loss_total += policy_step(agent_.prolonet->shallow(), actor_opt_, cfg_, mode, chunk, adv, skipped);
        if (train_deep) {
          // Off-policy for the deep net: its ratio is taken against the shallow behavior distribution.
          std::size_t ignored = 0;
          policy_step(agent_.prolonet->deep(), deep_opt_, cfg_, mode, chunk, adv, ignored);
        }
      } else if (agent_.mlp) {
        loss_total += policy_step(*agent_.mlp, actor_opt_, cfg_, mode, chunk, adv, skipped);
      }
      if (agent_.critic) {
        std::visit([&](auto& net) { critic_step(net, critic_opt_, cfg_.learning_rate, chunk, target); },
                   *agent_.critic);
      }
      ++steps;
    }
  }
  return steps ? loss_total / static_cast<double>(steps) : 0.0;
}

double Trainer::probe(std::size_t episode) {
  return evaluate(agent_, *env_, cfg_.rollback_probes, mix_seed(seed_, 0x70u, episode)).mean;
}

nlohmann::json Trainer::optimizer_state() const {
  auto one = [](const RmsPropState& s) {
    return nlohmann::json{{"decay", s.decay}, {"eps", s.eps}, {"mean_square", s.mean_square}};
  };
  return {{"actor", one(actor_opt_)}, {"deep", one(deep_opt_)}, {"critic", one(critic_opt_)}};
}

Trainer::Snapshot Trainer::snapshot() const { return {agent_, actor_opt_, deep_opt_, critic_opt_}; }

void Trainer::restore(const Snapshot& s) {
  agent_ = s.agent;
  actor_opt_ = s.actor;
  deep_opt_ = s.deep;
  critic_opt_ = s.critic;
}

EpisodeMetrics Trainer::run_episode() {
  EpisodeMetrics m;
  m.episode = episode_;
  m.mode = loki_schedule(episode_, cfg_);
  if (m.mode == UpdateMode::Imitation && !agent_.tree) m.mode = UpdateMode::PolicyGradient;
  const std::size_t episode = episode_++;

  std::vector<Rollout> rollouts;
  try {
    rollouts = collect(episode);
  } catch (const std::exception&) {
    m.aborted = true;
    return m;
  }
  for (const auto& r : rollouts) {
    m.reward += r.episode_reward;
    m.length += static_cast<double>(r.length);
    m.mean_fire_distance += r.mean_fire_distance;
  }
  const double w = static_cast<double>(rollouts.size());
  m.reward /= w;
  m.length /= w;
  m.mean_fire_distance /= w;
  if (!agent_.learns()) return m;

  const Buffer buffer = build_buffer(rollouts);
  std::optional<Snapshot> before;
  double before_reward = 0.0;
  if (cfg_.rollback) {
    before_reward = probe(episode);
    before = snapshot();
  }
  m.loss = update(buffer, m.mode, m.skipped_samples);
  if (cfg_.rollback) {
    const double after = probe(episode);
    if (after < before_reward - cfg_.rollback_tolerance * std::abs(before_reward)) {
      restore(*before);
      m.rolled_back = true;
    }
  }
  if (!m.rolled_back && agent_.prolonet && agent_.growth) {
    auto& pair = *agent_.prolonet;
    const std::size_t shallow_nodes = pair.shallow().nodes.size();
    const std::size_t deep_nodes = pair.deep().nodes.size();
    m.growth_events = pair.maybe_deepen();
    if (!m.growth_events.empty()) {
      // Moments follow the parameters they were accumulated for.
      const auto& o = pair.origins();
      const std::size_t in = pair.shallow().input_dim, out = pair.shallow().output_dim;
      auto actor = carry_parameter_state(actor_opt_.mean_square, shallow_nodes, deep_opt_.mean_square, deep_nodes, in,
                                         out, o.shallow_nodes, o.shallow_leaves);
      auto deep = carry_parameter_state(actor_opt_.mean_square, shallow_nodes, deep_opt_.mean_square, deep_nodes, in,
                                        out, o.deep_nodes, o.deep_leaves);
      actor_opt_.mean_square = std::move(actor);
      deep_opt_.mean_square = std::move(deep);
    }
  }
  return m;
}

std::vector<EpisodeMetrics> train_episode_loop(Agent& agent, const Env& env, const TrainerConfig& cfg,
                                               std::size_t episodes, std::uint64_t seed,
                                               const EpisodeCallback& on_episode) {
  Trainer trainer(agent, env, cfg, seed);
  std::vector<EpisodeMetrics> out;
  out.reserve(episodes);
  for (std::size_t i = 0; i < episodes; ++i) {
    out.push_back(trainer.run_episode());
    if (on_episode) on_episode(out.back(), agent);
  }
  return out;
}

EvalResult evaluate(const Agent& agent, const Env& env, std::size_t episodes, std::uint64_t seed, bool greedy,
                    const StepObserver& observer, std::vector<Rollout>* rollouts) {
  EvalResult res;
  auto instance = env.clone();
  auto policy = [&agent, greedy](std::span<const double> obs, std::mt19937_64& rng) {
    Decision d = agent.act(obs, rng);
    if (greedy) d.action = agent.greedy_action(obs);
    return d;
  };
  double distance = 0.0;
  for (std::size_t i = 0; i < episodes; ++i) {
    std::mt19937_64 rng(mix_seed(seed, i, 1));
    Rollout r = multiagent_run(policy, *instance, mix_seed(seed, i), rng, observer);
    res.rewards.push_back(r.episode_reward);
    res.lengths.push_back(static_cast<double>(r.length));
    distance += r.mean_fire_distance;
    if (rollouts) rollouts->push_back(std::move(r));
  }
  if (episodes == 0) return res;
  const double n = static_cast<double>(episodes);
  res.mean = std::accumulate(res.rewards.begin(), res.rewards.end(), 0.0) / n;
  res.mean_length = std::accumulate(res.lengths.begin(), res.lengths.end(), 0.0) / n;
  res.mean_fire_distance = distance / n;
  double var = 0.0;
  for (double r : res.rewards) var += (r - res.mean) * (r - res.mean);
  res.stddev = std::sqrt(var / n);
  return res;
}

DivergenceRecord divergence(const ProLoNet& init, const ProLoNet& current) {
  if (current.nodes.size() < init.nodes.size() || current.leaves.size() < init.leaves.size() ||
      current.input_dim != init.input_dim || current.output_dim != init.output_dim) {
    throw InvalidInput("networks are not structurally comparable");
  }
  DivergenceRecord rec;
  double sw = 0.0, sc = 0.0, sl = 0.0;
  std::size_t nw = 0, nl = 0;
  for (std::size_t i = 0; i < init.nodes.size(); ++i) {
    const auto& a = init.nodes[i];
    const auto& b = current.nodes[i];
    for (std::size_t k = 0; k < a.weights.size(); ++k) {
      const double d = a.weights[k] - b.weights[k];
      sw += d * d;
      ++nw;
    }
    const double d = a.comparator - b.comparator;
    sc += d * d;
  }
  for (std::size_t i = 0; i < init.leaves.size(); ++i) {
    const auto& a = init.leaves[i].action_weights;
    const auto& b = current.leaves[i].action_weights;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double d = a[k] - b[k];
      sl += d * d;
      ++nl;
    }
  }
  if (nw) rec.mse_weights = sw / static_cast<double>(nw);
  if (!init.nodes.empty()) rec.mse_comparators = sc / static_cast<double>(init.nodes.size());
  if (nl) rec.mse_leaves = sl / static_cast<double>(nl);
  return rec;
}

}  // namespace prolonet
