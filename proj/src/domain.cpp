#include "prolonet/domain.hpp"

#include <sstream>

namespace prolonet {

namespace {

// Near the centre the cart is pushed toward the side the pole is falling to.
// Near an edge the heuristic tries to recenter unless the pole is already
// falling hard toward that edge.
constexpr const char* kCartPoleTree = R"(# cart pole heuristic
if 5*x_position > 6 then
  (if 50*angle + 10*ang_vel > 4 then right else left)
else
  (if 5*x_position < -6 then
     (if 50*angle + 10*ang_vel < -4 then left else right)
   else
     (if 50*angle + 10*ang_vel > 0 then right else left))
)";

// Closest drone to fire 1 follows fire 1, the other drone follows fire 2.
constexpr const char* kWildfireTree = R"(# wildfire heuristic
if 10*closest_f1 > 5 then
  (if 20*f1_north > 1 then north
   else (if 20*f1_north < -1 then south
   else (if 20*f1_west > 0 then west else east)))
else
  (if 20*f2_north > 1 then north
   else (if 20*f2_north < -1 then south
   else (if 20*f2_west > 0 then west else east)))
)";

CheckTemplate make_check(std::string id, std::string label, std::size_t feature, double coefficient, Comparison op,
                         double value) {
  return {std::move(id), std::move(label), {{feature, coefficient}}, op, value};
}

DomainInfo build_cartpole() {
  DomainInfo info{Domain::CartPole, "cartpole", {"x_position", "x_vel", "angle", "ang_vel"}, {"left", "right"},
                  {}, kCartPoleTree, 475.0};
  using C = Comparison;
  info.checks = {
      make_check("cart_right", "The cart is right of center", 0, 1.0, C::Greater, 0.0),
      make_check("cart_left", "The cart is left of center", 0, 1.0, C::Less, 0.0),
      make_check("cart_near_right_edge", "The cart is near the right edge", 0, 5.0, C::Greater, 6.0),
      make_check("cart_near_left_edge", "The cart is near the left edge", 0, 5.0, C::Less, -6.0),
      make_check("moving_right", "The cart is moving right", 1, 1.0, C::Greater, 0.0),
      make_check("moving_left", "The cart is moving left", 1, 1.0, C::Less, 0.0),
      make_check("pole_leans_right", "The pole leans right", 2, 50.0, C::Greater, 0.0),
      make_check("pole_leans_left", "The pole leans left", 2, 50.0, C::Less, 0.0),
      make_check("pole_falling_right", "The pole is rotating right", 3, 10.0, C::Greater, 0.0),
      make_check("pole_falling_left", "The pole is rotating left", 3, 10.0, C::Less, 0.0),
  };
  return info;
}

DomainInfo build_wildfire() {
  DomainInfo info{Domain::Wildfire,
                  "wildfire",
                  {"f1_north", "f1_west", "f2_north", "f2_west", "closest_f1", "closest_f2"},
                  {"north", "east", "south", "west"},
                  {},
                  kWildfireTree,
                  std::nullopt};
  using C = Comparison;
  // Direction checks carry a dead zone of 25 grid units (0.05 normalized).
  for (std::size_t fire = 0; fire < 2; ++fire) {
    const std::string f = "f" + std::to_string(fire + 1);
    const std::string name = "Fire " + std::to_string(fire + 1);
    const std::size_t north = 2 * fire;
    const std::size_t west = 2 * fire + 1;
    info.checks.push_back(make_check(f + "_north", "If " + name + " is to my north", north, 20.0, C::Greater, 1.0));
    info.checks.push_back(make_check(f + "_south", "If " + name + " is to my south", north, 20.0, C::Less, -1.0));
    info.checks.push_back(make_check(f + "_west", "If " + name + " is to my west", west, 20.0, C::Greater, 1.0));
    info.checks.push_back(make_check(f + "_east", "If " + name + " is to my east", west, 20.0, C::Less, -1.0));
  }
  for (std::size_t fire = 0; fire < 2; ++fire) {
    const std::string f = "f" + std::to_string(fire + 1);
    const std::string name = "Fire " + std::to_string(fire + 1);
    info.checks.push_back(
        make_check("closest_" + f, "If I am the closest drone to " + name, 4 + fire, 10.0, C::Greater, 5.0));
    info.checks.push_back(
        make_check("not_closest_" + f, "If I am not the closest drone to " + name, 4 + fire, 10.0, C::Less, 5.0));
  }
  return info;
}

std::string condition_source(const DomainInfo& info, const CheckTemplate& c) {
  std::ostringstream out;
  TreeSpec one{info.feature_names, info.action_names, {}, 0};
  one.nodes.push_back(Check{c.terms, c.op, c.value, 1, 2});
  one.nodes.push_back(ActionLeaf{0});
  one.nodes.push_back(ActionLeaf{0});
  // "if <cond> then a else a" -> "<cond>"
  const std::string text = format_tree(one);
  const auto start = text.find("if ") + 3;
  const auto stop = text.find(" then ");
  return text.substr(start, stop - start);
}

}  // namespace

Domain parse_domain(std::string_view name) {
  if (name == "cartpole" || name == "cart_pole") return Domain::CartPole;
  if (name == "wildfire") return Domain::Wildfire;
  throw InvalidInput("unknown domain '" + std::string(name) + "' (expected cartpole or wildfire)");
}

std::string to_string(Domain d) { return domain_info(d).name; }

const DomainInfo& domain_info(Domain d) {
  static const DomainInfo cartpole = build_cartpole();
  static const DomainInfo wildfire = build_wildfire();
  return d == Domain::CartPole ? cartpole : wildfire;
}

std::unique_ptr<Env> make_env(Domain d) {
  if (d == Domain::CartPole) return std::make_unique<CartPoleEnv>();
  return std::make_unique<WildfireEnv>();
}

TreeSpec parse_domain_tree(Domain d, std::string_view source) {
  const auto& info = domain_info(d);
  return parse_tree(source, info.feature_names, info.action_names);
}

TreeSpec default_tree(Domain d) { return parse_domain_tree(d, domain_info(d).default_tree); }

nlohmann::json vocabulary_json(Domain d) {
  const auto& info = domain_info(d);
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : info.checks) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : c.terms) {
      terms.push_back({{"feature", info.feature_names[t.feature]}, {"coefficient", t.coefficient}});
    }
    checks.push_back({{"id", c.id},
                      {"label", c.label},
                      {"terms", std::move(terms)},
                      {"op", c.op == Comparison::Greater ? ">" : "<"},
                      {"value", c.value},
                      {"condition", condition_source(info, c)}});
  }
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& a : info.action_names) actions.push_back({{"id", a}, {"label", "Move " + a}});
  if (d == Domain::CartPole) {
    actions[0]["label"] = "Push the cart left";
    actions[1]["label"] = "Push the cart right";
  }
  return {{"name", info.name},
          {"features", info.feature_names},
          {"actions", std::move(actions)},
          {"checks", std::move(checks)},
          {"default_tree", to_json(default_tree(d))}};
}

}  // namespace prolonet
