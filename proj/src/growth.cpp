#include "prolonet/growth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prolonet {

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

double entropy_of(std::span<const double> p) {
  double h = 0.0;
  for (double v : p) {
    if (v > 0.0) h -= v * std::log(v);
  }
  return h;
}

bool is_distribution(std::span<const double> w) {
  double total = 0.0;
  for (double v : w) {
    if (v < 0.0) return false;
    total += v;
  }
  return std::abs(total - 1.0) <= 1e-6;
}

}  // namespace

double leaf_entropy(std::span<const double> w, EntropyMode mode) {
  if (w.empty()) return 0.0;
  if (mode == EntropyMode::Softmax || (mode == EntropyMode::Auto && !is_distribution(w))) {
    return entropy_of(softmax(w));
  }
  std::vector<double> p(w.size());
  std::transform(w.begin(), w.end(), p.begin(), [](double v) { return std::max(v, 0.0); });
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  if (total <= 0.0) return std::log(static_cast<double>(w.size()));
  for (auto& v : p) v /= total;
  return entropy_of(p);
}

double leaf_entropy(const Leaf& leaf, EntropyMode mode) { return leaf_entropy(leaf.action_weights, mode); }

nlohmann::json to_json(const GrowthEvent& e, std::size_t episode) {
  return {{"episode", episode},
          {"leaf_id", e.leaf_id},
          {"shallow_entropy", e.shallow_entropy},
          {"child_entropies", {e.child_entropies[0], e.child_entropies[1]}},
          {"epsilon", e.epsilon}};
}

std::vector<double> carry_parameter_state(std::span<const double> shallow_state, std::size_t shallow_nodes,
                                          std::span<const double> deep_state, std::size_t deep_nodes,
                                          std::size_t input_dim, std::size_t output_dim,
                                          std::span<const ParamOrigin> nodes, std::span<const ParamOrigin> leaves) {
  const std::size_t node_size = input_dim + 2;
  std::vector<double> out;
  out.reserve(nodes.size() * node_size + leaves.size() * output_dim);
  auto copy = [&](const ParamOrigin& o, std::size_t offset, std::size_t width) {
    std::span<const double> src;
    if (o.from == ParamOrigin::From::Shallow) src = shallow_state;
    if (o.from == ParamOrigin::From::Deep) src = deep_state;
    if (src.empty()) {
      out.insert(out.end(), width, 0.0);
      return;
    }
    if (offset + width > src.size()) throw InvalidInput("parameter state is shorter than its network");
    out.insert(out.end(), src.begin() + static_cast<std::ptrdiff_t>(offset),
               src.begin() + static_cast<std::ptrdiff_t>(offset + width));
  };
  auto leaf_base = [&](const ParamOrigin& o) {
    return (o.from == ParamOrigin::From::Shallow ? shallow_nodes : deep_nodes) * node_size;
  };
  for (const auto& o : nodes) copy(o, o.index * node_size, node_size);
  for (const auto& o : leaves) copy(o, leaf_base(o) + o.index * output_dim, output_dim);
  return out;
}

bool is_one_level_deeper(const ProLoNet& shallow, const ProLoNet& deep) {
  const std::size_t n = shallow.nodes.size();
  const std::size_t l = shallow.leaves.size();
  if (deep.input_dim != shallow.input_dim || deep.output_dim != shallow.output_dim) return false;
  if (deep.nodes.size() != n + l || deep.leaves.size() != 2 * l) return false;
  for (std::size_t j = 0; j < l; ++j) {
    auto expect = shallow.leaves[j].path;
    expect.push_back({n + j, Polarity::True});
    if (deep.leaves[2 * j].path != expect) return false;
    expect.back().polarity = Polarity::False;
    if (deep.leaves[2 * j + 1].path != expect) return false;
  }
  return true;
}

GrowthPair::GrowthPair(ProLoNet shallow, std::uint64_t seed, GrowthConfig config)
    : shallow_(std::move(shallow)), config_(config), rng_(seed) {
  shallow_.validate();
  const std::size_t n = shallow_.nodes.size();
  std::vector<std::size_t> node_origin(n);
  std::iota(node_origin.begin(), node_origin.end(), 0);
  std::vector<std::size_t> leaf_origin(shallow_.leaves.size(), kNone);
  // Mirror nodes start as copies of the shallow ones.
  ProLoNet seed_deep = shallow_;
  rebuild_deep(seed_deep, n, node_origin, leaf_origin);
  for (std::size_t k = 0; k < n; ++k) origins_.shallow_nodes.push_back({ParamOrigin::From::Shallow, k});
  for (std::size_t j = 0; j < shallow_.leaves.size(); ++j) {
    origins_.shallow_leaves.push_back({ParamOrigin::From::Shallow, j});
  }
}

DecisionNode GrowthPair::random_node() {
  std::uniform_real_distribution<double> sym(-1.0, 1.0);
  DecisionNode d;
  d.weights.resize(shallow_.input_dim);
  for (auto& w : d.weights) w = sym(rng_);
  d.comparator = sym(rng_);
  d.alpha = 1.0;
  return d;
}

Leaf GrowthPair::random_leaf(std::vector<PathStep> path) {
  std::uniform_real_distribution<double> pos(0.0, 1.0);
  Leaf leaf;
  leaf.action_weights.resize(shallow_.output_dim);
  for (auto& a : leaf.action_weights) a = pos(rng_);
  leaf.path = std::move(path);
  return leaf;
}

// node_origin[k]: index in old_deep of the parameters for mirror node k.
// leaf_origin[j]: old shallow leaf whose frontier is reused for shallow leaf j,
// or kNone for a fresh random frontier. Frontier reuse reads old_deep at the
// old layout (node old_shallow_nodes + i, leaves 2i and 2i + 1).
void GrowthPair::rebuild_deep(const ProLoNet& old_deep, std::size_t old_shallow_nodes,
                              const std::vector<std::size_t>& node_origin,
                              const std::vector<std::size_t>& leaf_origin) {
  const std::size_t n = shallow_.nodes.size();
  const std::size_t l = shallow_.leaves.size();

  ProLoNet deep;
  deep.input_dim = shallow_.input_dim;
  deep.output_dim = shallow_.output_dim;
  deep.nodes.reserve(n + l);
  for (std::size_t k = 0; k < n; ++k) deep.nodes.push_back(old_deep.nodes[node_origin[k]]);

  using From = ParamOrigin::From;
  origins_.deep_nodes.clear();
  origins_.deep_leaves.clear();
  for (std::size_t k = 0; k < n; ++k) origins_.deep_nodes.push_back({From::Deep, node_origin[k]});

  std::vector<FrontierSlot> map(l);
  deep.leaves.reserve(2 * l);
  for (std::size_t j = 0; j < l; ++j) {
    const std::size_t node_id = n + j;
    auto path_true = shallow_.leaves[j].path;
    path_true.push_back({node_id, Polarity::True});
    auto path_false = shallow_.leaves[j].path;
    path_false.push_back({node_id, Polarity::False});

    if (leaf_origin[j] != kNone) {
      const std::size_t i = leaf_origin[j];
      deep.nodes.push_back(old_deep.nodes[old_shallow_nodes + i]);
      Leaf t = old_deep.leaves[2 * i];
      t.path = std::move(path_true);
      Leaf f = old_deep.leaves[2 * i + 1];
      f.path = std::move(path_false);
      deep.leaves.push_back(std::move(t));
      deep.leaves.push_back(std::move(f));
      origins_.deep_nodes.push_back({From::Deep, old_shallow_nodes + i});
      origins_.deep_leaves.push_back({From::Deep, 2 * i});
      origins_.deep_leaves.push_back({From::Deep, 2 * i + 1});
    } else {
      deep.nodes.push_back(random_node());
      deep.leaves.push_back(random_leaf(std::move(path_true)));
      deep.leaves.push_back(random_leaf(std::move(path_false)));
      origins_.deep_nodes.push_back({From::Fresh, 0});
      origins_.deep_leaves.push_back({From::Fresh, 0});
      origins_.deep_leaves.push_back({From::Fresh, 0});
    }
    map[j] = {node_id, 2 * j, 2 * j + 1};
  }
  deep.validate();
  deep_ = std::move(deep);
  leaf_map_ = std::move(map);
}

std::vector<GrowthEvent> GrowthPair::maybe_deepen() {
  const std::size_t n = shallow_.nodes.size();
  const std::size_t l = shallow_.leaves.size();

  std::vector<GrowthEvent> events;
  for (std::size_t i = 0; i < l; ++i) {
    const double h = leaf_entropy(shallow_.leaves[i], config_.entropy);
    const double h1 = leaf_entropy(deep_.leaves[leaf_map_[i].true_leaf], config_.entropy);
    const double h2 = leaf_entropy(deep_.leaves[leaf_map_[i].false_leaf], config_.entropy);
    const double children = config_.aggregation == ChildAggregation::Mean ? 0.5 * (h1 + h2) : h1 + h2;
    if (h > children + config_.epsilon) events.push_back({i, h, {h1, h2}, config_.epsilon});
  }
  if (events.empty()) return events;

  const ProLoNet old_deep = deep_;
  ProLoNet grown = shallow_;
  std::vector<std::size_t> node_origin(n);
  std::iota(node_origin.begin(), node_origin.end(), 0);
  std::vector<std::size_t> leaf_origin(l);
  std::iota(leaf_origin.begin(), leaf_origin.end(), 0);
  using From = ParamOrigin::From;
  GrowthOrigins next;
  for (std::size_t k = 0; k < n; ++k) next.shallow_nodes.push_back({From::Shallow, k});
  for (std::size_t j = 0; j < l; ++j) next.shallow_leaves.push_back({From::Shallow, j});

  for (std::size_t k = 0; k < events.size(); ++k) {
    const std::size_t i = events[k].leaf_id;
    const FrontierSlot slot = leaf_map_[i];
    const std::size_t new_node = n + k;
    grown.nodes.push_back(old_deep.nodes[slot.node]);
    node_origin.push_back(slot.node);

    const auto base_path = shallow_.leaves[i].path;
    Leaf t = old_deep.leaves[slot.true_leaf];
    t.path = base_path;
    t.path.push_back({new_node, Polarity::True});
    Leaf f = old_deep.leaves[slot.false_leaf];
    f.path = base_path;
    f.path.push_back({new_node, Polarity::False});

    grown.leaves[i] = std::move(t);
    leaf_origin[i] = kNone;
    grown.leaves.push_back(std::move(f));
    leaf_origin.push_back(kNone);
    next.shallow_nodes.push_back({From::Deep, slot.node});
    next.shallow_leaves[i] = {From::Deep, slot.true_leaf};
    next.shallow_leaves.push_back({From::Deep, slot.false_leaf});
  }
  grown.validate();
  shallow_ = std::move(grown);
  rebuild_deep(old_deep, n, node_origin, leaf_origin);
  origins_.shallow_nodes = std::move(next.shallow_nodes);
  origins_.shallow_leaves = std::move(next.shallow_leaves);
  return events;
}

bool GrowthPair::in_sync() const {
  if (!is_one_level_deeper(shallow_, deep_) || leaf_map_.size() != shallow_.leaves.size()) return false;
  const std::size_t n = shallow_.nodes.size();
  for (std::size_t j = 0; j < leaf_map_.size(); ++j) {
    if (leaf_map_[j] != FrontierSlot{n + j, 2 * j, 2 * j + 1}) return false;
  }
  return true;
}

GrowthPair make_growth_pair(ProLoNet shallow, std::uint64_t seed, GrowthConfig config) {
  return GrowthPair(std::move(shallow), seed, config);
}

}  // namespace prolonet
