#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <nlohmann/json.hpp>

#include "prolonet/core.hpp"

namespace prolonet {

/// How a leaf's action weights become a distribution before taking entropy.
enum class EntropyMode {
  Auto,     // use the weights directly if they already form a distribution, else softmax
  Softmax,  // always softmax
  Direct,   // always treat as a distribution (weights are normalized by their sum)
};

/// How the entropies of the two deeper leaves are combined before comparing
/// against the shallow leaf.
enum class ChildAggregation { Mean, Sum };

struct GrowthConfig {
  double epsilon = 0.1;
  EntropyMode entropy = EntropyMode::Auto;
  ChildAggregation aggregation = ChildAggregation::Mean;
};

/// Shannon entropy in nats.
double leaf_entropy(const Leaf& leaf, EntropyMode mode = EntropyMode::Auto);
double leaf_entropy(std::span<const double> action_weights, EntropyMode mode = EntropyMode::Auto);

/// Where a shallow leaf lives in the deeper network.
struct FrontierSlot {
  std::size_t node = 0;        // deep node standing in for the shallow leaf
  std::size_t true_leaf = 0;   // deep leaf under the TRUE branch
  std::size_t false_leaf = 0;  // deep leaf under the FALSE branch

  bool operator==(const FrontierSlot&) const = default;
};

struct GrowthEvent {
  std::size_t leaf_id = 0;  // shallow leaf that was replaced
  double shallow_entropy = 0.0;
  std::array<double, 2> child_entropies{};
  double epsilon = 0.0;
};

nlohmann::json to_json(const GrowthEvent& event, std::size_t episode);

/// Where a node or leaf of a rebuilt network took its parameters from.
struct ParamOrigin {
  enum class From { Shallow, Deep, Fresh };
  From from = From::Fresh;
  std::size_t index = 0;  // node or leaf index in the pre-growth network

  bool operator==(const ParamOrigin&) const = default;
};

/// Provenance of every node and leaf after the latest rebuild.
struct GrowthOrigins {
  std::vector<ParamOrigin> shallow_nodes, shallow_leaves, deep_nodes, deep_leaves;
};

/// Per-parameter state (optimizer moments, say) laid out like parameters(),
/// moved to follow the nodes and leaves it belonged to. Fresh entries and
/// entries whose source state is empty become zero.
std::vector<double> carry_parameter_state(std::span<const double> shallow_state, std::size_t shallow_nodes,
                                          std::span<const double> deep_state, std::size_t deep_nodes,
                                          std::size_t input_dim, std::size_t output_dim,
                                          std::span<const ParamOrigin> nodes, std::span<const ParamOrigin> leaves);

/// The acting network and a one-level-deeper twin in which every leaf is a
/// fresh decision node over two fresh leaves.
///
/// Deep layout: nodes [0, shallow.nodes) mirror the shallow nodes, node
/// shallow.nodes + i replaces shallow leaf i, and deep leaves 2i / 2i + 1 are
/// its TRUE / FALSE children.
class GrowthPair {
 public:
  GrowthPair(ProLoNet shallow, std::uint64_t seed, GrowthConfig config = {});

  const ProLoNet& shallow() const { return shallow_; }
  const ProLoNet& deep() const { return deep_; }
  /// Parameter access for training. Callers must not change the structure.
  ProLoNet& shallow() { return shallow_; }
  ProLoNet& deep() { return deep_; }

  const std::vector<FrontierSlot>& leaf_map() const { return leaf_map_; }
  const GrowthConfig& config() const { return config_; }
  void set_epsilon(double epsilon) { config_.epsilon = epsilon; }

  /// Replaces every shallow leaf whose entropy exceeds the aggregated entropy
  /// of its deeper children plus epsilon with the deep node and leaves, then
  /// extends the deep network below them with random parameters.
  std::vector<GrowthEvent> maybe_deepen();

  /// Origins of the current layout relative to the layout before the last
  /// maybe_deepen that grew something.
  const GrowthOrigins& origins() const { return origins_; }

  /// True when deep is exactly shallow plus one frontier level.
  bool in_sync() const;

 private:
  void rebuild_deep(const ProLoNet& old_deep, std::size_t old_shallow_nodes,
                    const std::vector<std::size_t>& node_origin,
                    const std::vector<std::size_t>& leaf_origin);
  DecisionNode random_node();
  Leaf random_leaf(std::vector<PathStep> path);

  ProLoNet shallow_;
  ProLoNet deep_;
  std::vector<FrontierSlot> leaf_map_;
  GrowthOrigins origins_;
  GrowthConfig config_;
  std::mt19937_64 rng_;
};

GrowthPair make_growth_pair(ProLoNet shallow, std::uint64_t seed, GrowthConfig config = {});

/// Structural isomorphism check used by GrowthPair::in_sync; exposed for tests.
bool is_one_level_deeper(const ProLoNet& shallow, const ProLoNet& deep);

}  // namespace prolonet
