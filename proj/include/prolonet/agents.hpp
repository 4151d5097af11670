#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "prolonet/compile.hpp"
#include "prolonet/core.hpp"
#include "prolonet/domain.hpp"
#include "prolonet/envs.hpp"
#include "prolonet/growth.hpp"

namespace prolonet {

enum class AgentKind {
  ProLoNetInit,    // compiled from a decision tree
  ProLoNetRandom,  // same shape, random parameters
  Mlp,
  Heuristic,       // crisp tree traversal; never learns
  Loki,            // MLP that imitates the tree before switching to RL
};

AgentKind parse_agent_kind(std::string_view name);
std::string to_string(AgentKind kind);

using CriticNet = std::variant<ProLoNet, MlpPolicy>;

/// A policy plus, for learning agents, its critic.
struct Agent {
  AgentKind kind = AgentKind::Heuristic;
  std::size_t action_dim = 0;

  std::optional<GrowthPair> prolonet;  // ProLoNetInit / ProLoNetRandom
  std::optional<MlpPolicy> mlp;        // Mlp / Loki
  std::optional<CriticNet> critic;
  std::optional<TreeSpec> tree;        // Heuristic, Loki supervisor, ProLoNetInit source
  bool growth = true;

  bool learns() const { return kind != AgentKind::Heuristic; }
  bool is_prolonet() const { return prolonet.has_value(); }

  /// Acting network (the shallow one for ProLoNet agents).
  const ProLoNet& actor_prolonet() const { return prolonet->shallow(); }

  /// Softmax action distribution; one-hot for the heuristic.
  std::vector<double> probs(std::span<const double> observation) const;
  /// Critic estimate V(s, a).
  double value(std::span<const double> observation, std::size_t action) const;
  /// Baseline for advantages: critic outputs averaged under `probs`, so the
  /// action actually taken does not leak into its own baseline.
  double state_value(std::span<const double> observation, std::span<const double> probs) const;
  /// Samples an action from probs().
  Decision act(std::span<const double> observation, std::mt19937_64& rng) const;
  std::size_t greedy_action(std::span<const double> observation) const;
};

struct AgentOptions {
  bool growth = true;
  GrowthConfig growth_config;
  double mistake_rate = 0.0;     // ProLoNetInit only
  std::uint64_t mistake_seed = 0;
};

/// Builds the policy and critic for `kind`. Tree-based kinds use `tree`, or
/// the domain's default tree when it is absent. ProLoNet critics start as a
/// copy of the actor; MLP shapes repeat the observation width twice before
/// the action layer (4-4-4-2 for cart pole, 6-6-6-4 for wildfire).
Agent build_agent(AgentKind kind, Domain domain, const std::optional<TreeSpec>& tree, std::uint64_t seed,
                  const AgentOptions& options = {});

/// Samples an index from a probability vector.
std::size_t sample_action(std::span<const double> probs, std::mt19937_64& rng);

/// Serializes the acting network (prolonet-v1 or mlp-v1); heuristic agents
/// serialize their tree (treespec-v1).
nlohmann::json actor_to_json(const Agent& agent);

/// Inverse of actor_to_json for evaluation. The result has no critic.
Agent agent_from_json(const nlohmann::json& doc, Domain domain);

}  // namespace prolonet
