#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace prolonet {

struct Transition {
  std::vector<double> state;
  std::size_t action = 0;
  std::vector<double> action_probs;  // behavior distribution at selection time
  double reward = 0.0;
  double value_estimate = 0.0;

  // Crisp heuristic label for imitation updates.
  std::optional<std::size_t> expert_action;
};

struct Trajectory {
  std::vector<Transition> transitions;
  std::vector<double> returns;
  std::vector<double> advantages;
};

}  // namespace prolonet
