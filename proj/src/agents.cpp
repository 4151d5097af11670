#include "prolonet/agents.hpp"

#include <algorithm>

#include "prolonet/model_io.hpp"

namespace prolonet {

AgentKind parse_agent_kind(std::string_view name) {
  if (name == "prolonet" || name == "prolonet_init") return AgentKind::ProLoNetInit;
  if (name == "random_prolonet" || name == "prolonet_random") return AgentKind::ProLoNetRandom;
  if (name == "mlp") return AgentKind::Mlp;
  if (name == "heuristic") return AgentKind::Heuristic;
  if (name == "loki") return AgentKind::Loki;
  throw InvalidInput("unknown agent '" + std::string(name) +
                     "' (expected prolonet, random_prolonet, mlp, heuristic or loki)");
}

std::string to_string(AgentKind kind) {
  switch (kind) {
    case AgentKind::ProLoNetInit: return "prolonet";
    case AgentKind::ProLoNetRandom: return "random_prolonet";
    case AgentKind::Mlp: return "mlp";
    case AgentKind::Heuristic: return "heuristic";
    case AgentKind::Loki: return "loki";
  }
  return "unknown";
}

std::size_t sample_action(std::span<const double> probs, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Rounding left u beyond the accumulated mass; take the last nonzero entry.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return 0;
}

std::vector<double> Agent::probs(std::span<const double> observation) const {
  if (prolonet) return forward(prolonet->shallow(), observation).probs;
  if (mlp) return softmax(mlp_forward(*mlp, observation));
  std::vector<double> onehot(action_dim, 0.0);
  onehot.at(heuristic_act(*tree, observation)) = 1.0;
  return onehot;
}

double Agent::value(std::span<const double> observation, std::size_t action) const {
  if (!critic) return 0.0;
  return std::visit([&](const auto& net) { return logits(net, observation).at(action); }, *critic);
}

double Agent::state_value(std::span<const double> observation, std::span<const double> probs) const {
  if (!critic) return 0.0;
  const auto q = std::visit([&](const auto& net) { return logits(net, observation); }, *critic);
  if (q.size() != probs.size()) throw InvalidInput("critic and policy disagree on the action count");
  double v = 0.0;
  for (std::size_t a = 0; a < q.size(); ++a) v += probs[a] * q[a];
  return v;
}

Decision Agent::act(std::span<const double> observation, std::mt19937_64& rng) const {
  Decision d;
  d.probs = probs(observation);
  d.action = kind == AgentKind::Heuristic ? heuristic_act(*tree, observation) : sample_action(d.probs, rng);
  d.value = state_value(observation, d.probs);
  if (tree && kind == AgentKind::Loki) d.expert_action = heuristic_act(*tree, observation);
  return d;
}

std::size_t Agent::greedy_action(std::span<const double> observation) const {
  if (kind == AgentKind::Heuristic) return heuristic_act(*tree, observation);
  const auto p = probs(observation);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

Agent build_agent(AgentKind kind, Domain domain, const std::optional<TreeSpec>& tree, std::uint64_t seed,
                  const AgentOptions& options) {
  const auto& info = domain_info(domain);
  const std::size_t in = info.feature_names.size();
  const std::size_t out = info.action_names.size();
  Agent agent;
  agent.kind = kind;
  agent.action_dim = out;
  agent.growth = options.growth;

  const bool needs_tree = kind == AgentKind::ProLoNetInit || kind == AgentKind::ProLoNetRandom ||
                          kind == AgentKind::Heuristic || kind == AgentKind::Loki;
  if (needs_tree) agent.tree = tree ? *tree : default_tree(domain);

  // Distinct streams for the actor, critic and growth frontier.
  std::seed_seq seq{seed, std::uint64_t{0x9e3779b97f4a7c15ULL}};
  std::array<std::uint64_t, 3> streams{};
  {
    std::array<std::uint32_t, 6> raw{};
    seq.generate(raw.begin(), raw.end());
    for (std::size_t i = 0; i < 3; ++i) streams[i] = (std::uint64_t{raw[2 * i]} << 32) | raw[2 * i + 1];
  }

  switch (kind) {
    case AgentKind::ProLoNetInit:
    case AgentKind::ProLoNetRandom: {
      ProLoNet actor;
      if (kind == AgentKind::ProLoNetInit) {
        actor = compile_tree(*agent.tree, in, out);
        if (options.mistake_rate > 0.0) {
          actor = inject_mistakes(actor, {options.mistake_rate, options.mistake_seed});
        }
      } else {
        actor = random_prolonet(agent.tree->check_count(), agent.tree->check_count() + 1, in, out, streams[0]);
      }
      agent.critic = actor;
      agent.prolonet.emplace(std::move(actor), streams[2], options.growth_config);
      break;
    }
    case AgentKind::Mlp:
    case AgentKind::Loki: {
      const std::vector<std::size_t> dims{in, in, in, out};
      agent.mlp = random_mlp(dims, streams[0]);
      agent.critic = random_mlp(dims, streams[1]);
      agent.growth = false;
      break;
    }
    case AgentKind::Heuristic:
      agent.growth = false;
      break;
  }
  return agent;
}

nlohmann::json actor_to_json(const Agent& agent) {
  if (agent.prolonet) return to_json(agent.prolonet->shallow());
  if (agent.mlp) return to_json(*agent.mlp);
  return to_json(*agent.tree);
}

Agent agent_from_json(const nlohmann::json& doc, Domain domain) {
  const auto& info = domain_info(domain);
  Agent agent;
  agent.action_dim = info.action_names.size();
  agent.growth = false;
  const std::string format = doc.is_object() ? doc.value("format", "") : "";
  if (format == kProLoNetFormat) {
    auto net = prolonet_from_json(doc);
    if (net.input_dim != info.feature_names.size() || net.output_dim != agent.action_dim) {
      throw InvalidInput("model dimensions do not match domain " + info.name);
    }
    agent.kind = AgentKind::ProLoNetInit;
    agent.prolonet.emplace(std::move(net), 0);
  } else if (format == kMlpFormat) {
    auto net = mlp_from_json(doc);
    if (net.input_dim() != info.feature_names.size() || net.output_dim() != agent.action_dim) {
      throw InvalidInput("model dimensions do not match domain " + info.name);
    }
    agent.kind = AgentKind::Mlp;
    agent.mlp = std::move(net);
  } else if (format == kTreeSpecFormat) {
    std::vector<TreeSpecIssue> issues;
    auto tree = treespec_from_json(doc, info.feature_names, info.action_names, info.checks, issues);
    if (!issues.empty()) throw InvalidInput("invalid tree at " + issues.front().path + ": " + issues.front().message);
    agent.kind = AgentKind::Heuristic;
    agent.tree = std::move(tree);
  } else {
    throw InvalidInput("unrecognized model format '" + format + "'");
  }
  return agent;
}

}  // namespace prolonet
