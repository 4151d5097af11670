#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "prolonet/compile.hpp"
#include "prolonet/envs.hpp"

namespace prolonet {

enum class Domain { CartPole, Wildfire };

Domain parse_domain(std::string_view name);
std::string to_string(Domain d);

struct DomainInfo {
  Domain domain;
  std::string name;
  std::vector<std::string> feature_names;
  std::vector<std::string> action_names;
  /// Pre-made state checks offered to tree authors.
  std::vector<CheckTemplate> checks;
  /// Built-in heuristic tree source, authored from a prose description.
  std::string default_tree;
  /// Running-mean reward at which the domain counts as solved, if any.
  std::optional<double> solved_reward;
};

const DomainInfo& domain_info(Domain d);
std::unique_ptr<Env> make_env(Domain d);
TreeSpec default_tree(Domain d);
TreeSpec parse_domain_tree(Domain d, std::string_view source);

/// GET /api/domains payload entry.
nlohmann::json vocabulary_json(Domain d);

}  // namespace prolonet
