#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "prolonet/compile.hpp"
#include "prolonet/growth.hpp"
#include "test_support.hpp"

using namespace prolonet;

namespace {

double plain_entropy(std::vector<double> p) {
  double h = 0.0;
  for (double v : p) h -= v * std::log(v);
  return h;
}

// Shallow leaf 0 stuck at [0.5, 0.5] with sharp deeper children.
GrowthPair stuck_pair(GrowthConfig cfg) {
  auto net = support::example_one();
  net.leaves[0].action_weights = {0.5, 0.5};
  GrowthPair pair(net, 17, cfg);
  const auto slot = pair.leaf_map()[0];
  pair.deep().leaves[slot.true_leaf].action_weights = {0.9, 0.1};
  pair.deep().leaves[slot.false_leaf].action_weights = {0.1, 0.9};
  return pair;
}

}  // namespace

TEST_CASE("leaf entropy examples") {
  CHECK(leaf_entropy(std::vector<double>{0.5, 0.5}) == doctest::Approx(0.6931).epsilon(1e-4));
  for (std::size_t k = 2; k <= 6; ++k) {
    CHECK(leaf_entropy(std::vector<double>(k, 3.7)) == doctest::Approx(std::log(double(k))).epsilon(1e-12));
  }
  // Softmax of [0.9, 0.1] puts 1 / (1 + e^-0.8) on the first action.
  const double p = 1.0 / (1.0 + std::exp(-0.8));
  CHECK(p == doctest::Approx(0.6900).epsilon(1e-4));
  const double soft = leaf_entropy(std::vector<double>{0.9, 0.1}, EntropyMode::Softmax);
  CHECK(soft == doctest::Approx(plain_entropy({p, 1 - p})).epsilon(1e-12));
  CHECK(soft == doctest::Approx(0.6191).epsilon(1e-3));
  const double direct = leaf_entropy(std::vector<double>{0.9, 0.1}, EntropyMode::Auto);
  CHECK(direct == doctest::Approx(plain_entropy({0.9, 0.1})).epsilon(1e-12));
  CHECK(direct == doctest::Approx(0.3251).epsilon(1e-3));
  // Not a distribution, so Auto falls back to softmax.
  CHECK(leaf_entropy(std::vector<double>{2.0, -1.0}) ==
        doctest::Approx(leaf_entropy(std::vector<double>{2.0, -1.0}, EntropyMode::Softmax)));
  CHECK(leaf_entropy(std::vector<double>{1.0, 0.0}) == 0.0);
}

TEST_CASE("make pair builds one extra level") {
  GrowthPair pair(support::example_one(), 1);
  CHECK(pair.deep().nodes.size() == 3);
  CHECK(pair.deep().leaves.size() == 4);
  CHECK(pair.in_sync());
  CHECK(pair.deep().nodes[0] == pair.shallow().nodes[0]);

  std::mt19937_64 rng(2);
  auto net = random_prolonet(9, 10, 4, 2, 5);
  net.leaves.push_back({{0.5, 0.5}, {}});
  GrowthPair big(net, 3);
  CHECK(big.shallow().nodes.size() == 9);
  CHECK(big.shallow().leaves.size() == 11);
  CHECK(big.deep().nodes.size() == 20);
  CHECK(big.deep().leaves.size() == 22);

  std::set<std::size_t> nodes, leaves;
  for (const auto& slot : big.leaf_map()) {
    nodes.insert(slot.node);
    leaves.insert(slot.true_leaf);
    leaves.insert(slot.false_leaf);
  }
  CHECK(big.leaf_map().size() == 11);
  CHECK(nodes.size() == 11);
  CHECK(leaves.size() == 22);
  for (const auto& n : big.deep().nodes) CHECK(n.alpha == 1.0);
}

TEST_CASE("stuck uniform leaf triggers growth under the defaults") {
  auto pair = stuck_pair({});
  const auto events = pair.maybe_deepen();
  REQUIRE(events.size() == 1);
  CHECK(events[0].leaf_id == 0);
  CHECK(events[0].shallow_entropy == doctest::Approx(0.6931).epsilon(1e-4));
  CHECK(events[0].child_entropies[0] == doctest::Approx(0.3251).epsilon(1e-3));
  CHECK(pair.shallow().nodes.size() == 2);
  CHECK(pair.shallow().leaves.size() == 3);
  CHECK(pair.shallow().leaves[0].action_weights == std::vector<double>{0.9, 0.1});
  CHECK(pair.shallow().leaves[2].action_weights == std::vector<double>{0.1, 0.9});
  CHECK(pair.deep().nodes.size() == 5);
  CHECK(pair.deep().leaves.size() == 6);
  CHECK(pair.in_sync());
}

TEST_CASE("stuck leaf does not trigger under softmax or summed entropies") {
  GrowthConfig soft;
  soft.entropy = EntropyMode::Softmax;
  auto a = stuck_pair(soft);
  CHECK(a.maybe_deepen().empty());

  GrowthConfig sum;
  sum.aggregation = ChildAggregation::Sum;
  auto b = stuck_pair(sum);
  CHECK(b.maybe_deepen().empty());
}

TEST_CASE("identical children never trigger") {
  auto net = support::example_one();
  net.leaves[0].action_weights = {0.3, 0.7};
  GrowthPair pair(net, 9);
  for (auto& leaf : pair.deep().leaves) leaf.action_weights = {0.3, 0.7};
  pair.shallow().leaves[1].action_weights = {0.3, 0.7};
  CHECK(pair.maybe_deepen().empty());
}

TEST_CASE("infinite epsilon disables growth") {
  GrowthConfig cfg;
  cfg.epsilon = std::numeric_limits<double>::infinity();
  auto pair = stuck_pair(cfg);
  const auto before = pair.shallow();
  CHECK(pair.maybe_deepen().empty());
  CHECK(pair.shallow() == before);
}

TEST_CASE("pair stays in sync over random deepen cycles") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GrowthPair pair(random_prolonet(3, 4, 4, 3, 8), 77);
  std::size_t prev_nodes = pair.shallow().nodes.size();
  std::size_t grew = 0;
  for (int cycle = 0; cycle < 50; ++cycle) {
    // Perturb both networks the way training would.
    for (auto* net : {&pair.shallow(), &pair.deep()}) {
      auto p = parameters(*net);
      for (auto& v : p) v += 0.3 * u(rng);
      set_parameters(*net, p);
    }
    const auto events = pair.maybe_deepen();
    grew += events.size();
    CHECK(pair.in_sync());
    CHECK(is_one_level_deeper(pair.shallow(), pair.deep()));
    CHECK(pair.shallow().nodes.size() == prev_nodes + events.size());
    prev_nodes = pair.shallow().nodes.size();
    CHECK_NOTHROW(pair.shallow().validate());
    // Shallow is still a proper tree: leaf paths sum to one.
    std::vector<double> x{u(rng), u(rng), u(rng), u(rng)};
    double total = 0.0;
    for (double z : path_weights(pair.shallow(), x)) total += z;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  }
  CHECK(grew > 0);
}

TEST_CASE("deepening copies learned deep parameters into shallow") {
  auto pair = stuck_pair({});
  const auto slot = pair.leaf_map()[0];
  pair.deep().nodes[slot.node].comparator = 0.375;
  const auto learned = pair.deep().nodes[slot.node];
  REQUIRE(pair.maybe_deepen().size() == 1);
  CHECK(pair.shallow().nodes[1] == learned);
  // The mirror of the new node in deep keeps the learned parameters too.
  CHECK(pair.deep().nodes[1] == learned);
}

TEST_CASE("sync check notices a broken layout") {
  GrowthPair pair(support::example_one(), 4);
  auto deep = pair.deep();
  CHECK(is_one_level_deeper(pair.shallow(), deep));
  std::swap(deep.leaves[0], deep.leaves[1]);
  CHECK_FALSE(is_one_level_deeper(pair.shallow(), deep));
}

TEST_CASE("per-parameter state follows its parameters through growth") {
  // Using the parameters themselves as the state: after growth the carried
  // state must equal the new parameters wherever they were copied.
  auto check_cycle = [](GrowthPair& pair) {
    const auto old_shallow = pair.shallow();
    const auto old_deep = pair.deep();
    const auto events = pair.maybe_deepen();
    const auto& o = pair.origins();
    const std::size_t in = old_shallow.input_dim, out = old_shallow.output_dim;
    const auto s = carry_parameter_state(parameters(old_shallow), old_shallow.nodes.size(), parameters(old_deep),
                                         old_deep.nodes.size(), in, out, o.shallow_nodes, o.shallow_leaves);
    if (!events.empty()) CHECK(s == parameters(pair.shallow()));
    const auto d = carry_parameter_state(parameters(old_shallow), old_shallow.nodes.size(), parameters(old_deep),
                                         old_deep.nodes.size(), in, out, o.deep_nodes, o.deep_leaves);
    const auto now = parameters(pair.deep());
    REQUIRE(d.size() == now.size());
    if (events.empty()) return;
    std::size_t k = 0;
    for (const auto& origin : o.deep_nodes) {
      for (std::size_t j = 0; j < in + 2; ++j, ++k) {
        CHECK(d[k] == (origin.from == ParamOrigin::From::Fresh ? 0.0 : now[k]));
      }
    }
    for (const auto& origin : o.deep_leaves) {
      for (std::size_t j = 0; j < out; ++j, ++k) {
        CHECK(d[k] == (origin.from == ParamOrigin::From::Fresh ? 0.0 : now[k]));
      }
    }
  };
  auto pair = stuck_pair({});
  check_cycle(pair);
  CHECK(pair.origins().shallow_nodes.back() == ParamOrigin{ParamOrigin::From::Deep, 1});

  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  GrowthPair random_pair(random_prolonet(2, 3, 3, 3, 6), 5);
  for (int cycle = 0; cycle < 20; ++cycle) {
    for (auto* net : {&random_pair.shallow(), &random_pair.deep()}) {
      auto p = parameters(*net);
      for (auto& v : p) v += 0.3 * u(rng);
      set_parameters(*net, p);
    }
    check_cycle(random_pair);
  }

  // Missing source state reads as zero.
  const auto zeros = carry_parameter_state({}, 1, {}, 3, pair.shallow().input_dim, pair.shallow().output_dim, pair.origins().shallow_nodes,
                                           pair.origins().shallow_leaves);
  CHECK(zeros == std::vector<double>(parameter_count(pair.shallow()), 0.0));
}
