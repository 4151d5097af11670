#include "prolonet/compile.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

namespace prolonet {

using nlohmann::json;

namespace {

constexpr std::size_t kMaxDepth = 256;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double term_sum(const std::vector<Term>& terms, std::span<const double> state) {
  double s = 0.0;
  for (const auto& t : terms) s += t.coefficient * state[t.feature];
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// TreeSpec

std::size_t TreeSpec::check_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const RuleNode& n) { return std::holds_alternative<Check>(n); }));
}

std::size_t TreeSpec::leaf_count() const { return nodes.size() - check_count(); }

void TreeSpec::validate() const {
  if (nodes.empty()) throw InvalidInput("tree has no nodes");
  if (root >= nodes.size()) throw InvalidInput("tree root index out of range");
  std::vector<int> seen(nodes.size(), 0);
  std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
  while (!stack.empty()) {
    auto [i, depth] = stack.back();
    stack.pop_back();
    if (i >= nodes.size()) throw InvalidInput("tree child index out of range");
    if (seen[i]++) throw InvalidInput("tree node " + std::to_string(i) + " is reachable more than once");
    if (depth > kMaxDepth) throw InvalidInput("tree is deeper than " + std::to_string(kMaxDepth));
    std::visit(overloaded{
                   [&](const Check& c) {
                     if (c.terms.empty()) throw InvalidInput("check without features");
                     for (const auto& t : c.terms) {
                       if (t.feature >= feature_names.size()) throw InvalidInput("check references unknown feature");
                       if (!std::isfinite(t.coefficient)) throw InvalidInput("non-finite feature coefficient");
                     }
                     if (!std::isfinite(c.value)) throw InvalidInput("non-finite comparison value");
                     stack.push_back({c.if_false, depth + 1});
                     stack.push_back({c.if_true, depth + 1});
                   },
                   [&](const ActionLeaf& a) {
                     if (a.action >= action_names.size()) throw InvalidInput("leaf references unknown action");
                   },
               },
               nodes[i]);
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw InvalidInput("tree contains unreachable nodes");
  }
}

ParseError::ParseError(std::size_t line, std::size_t column, const std::string& message)
    : InvalidInput("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

// ---------------------------------------------------------------------------
// Lexer / parser

namespace {

enum class Tok { Ident, Number, Greater, Less, LParen, RParen, Star, Plus, Minus, End };

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  std::size_t line = 1;
  std::size_t column = 1;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t line = 1, col = 1, i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    Token tok{Tok::End, {}, 0.0, line, col};
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      tok.kind = Tok::Ident;
      tok.text = std::string(src.substr(i, j - i));
      advance(j - i);
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < src.size() && (std::isdigit(static_cast<unsigned char>(src[j])) || src[j] == '.')) ++j;
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      tok.kind = Tok::Number;
      tok.text = std::string(src.substr(i, j - i));
      auto [ptr, ec] = std::from_chars(tok.text.data(), tok.text.data() + tok.text.size(), tok.number);
      if (ec != std::errc() || ptr != tok.text.data() + tok.text.size()) {
        throw ParseError(line, col, "malformed number '" + tok.text + "'");
      }
      advance(j - i);
    } else {
      switch (c) {
        case '>': tok.kind = Tok::Greater; break;
        case '<': tok.kind = Tok::Less; break;
        case '(': tok.kind = Tok::LParen; break;
        case ')': tok.kind = Tok::RParen; break;
        case '*': tok.kind = Tok::Star; break;
        case '+': tok.kind = Tok::Plus; break;
        case '-': tok.kind = Tok::Minus; break;
        default: throw ParseError(line, col, std::string("unexpected character '") + c + "'");
      }
      tok.text = std::string(1, c);
      advance(1);
    }
    out.push_back(std::move(tok));
  }
  out.push_back({Tok::End, {}, 0.0, line, col});
  return out;
}

bool is_keyword(const std::string& s) { return s == "if" || s == "then" || s == "else" || s == "do"; }

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::span<const std::string> features, std::span<const std::string> actions)
      : tokens_(std::move(tokens)), features_(features), actions_(actions) {}

  TreeSpec run() {
    spec_.feature_names.assign(features_.begin(), features_.end());
    spec_.action_names.assign(actions_.begin(), actions_.end());
    spec_.root = expr(0);
    if (peek().kind != Tok::End) fail(peek(), "unexpected " + describe(peek()) + " after end of tree");
    return std::move(spec_);
  }

 private:
  const Token& peek() const { return tokens_[pos_]; }
  const Token& take() { return tokens_[pos_++]; }
  bool at_word(const char* w) const { return peek().kind == Tok::Ident && peek().text == w; }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const { throw ParseError(t.line, t.column, msg); }

  void expect_word(const char* w) {
    if (!at_word(w)) fail(peek(), std::string("expected '") + w + "' but found " + describe(peek()));
    take();
  }

  std::size_t push(RuleNode n) {
    spec_.nodes.push_back(std::move(n));
    return spec_.nodes.size() - 1;
  }

  std::size_t action(const Token& t) {
    auto it = std::find(actions_.begin(), actions_.end(), t.text);
    if (it == actions_.end()) fail(t, "unknown action '" + t.text + "'");
    return push(ActionLeaf{static_cast<std::size_t>(it - actions_.begin())});
  }

  std::size_t expr(std::size_t depth) {
    if (depth > kMaxDepth) fail(peek(), "tree nesting is too deep");
    const Token& t = peek();
    if (t.kind == Tok::LParen) {
      take();
      const std::size_t inner = expr(depth + 1);
      if (peek().kind != Tok::RParen) fail(peek(), "expected ')' but found " + describe(peek()));
      take();
      return inner;
    }
    if (at_word("do")) {
      take();
      const Token& a = peek();
      if (a.kind != Tok::Ident || is_keyword(a.text)) fail(a, "expected action name but found " + describe(a));
      take();
      return action(a);
    }
    if (at_word("if")) {
      take();
      Check check = condition();
      expect_word("then");
      if (peek().kind == Tok::End) fail(peek(), "missing 'then' branch");
      const std::size_t slot = push(check);
      const std::size_t t_branch = branch(depth);
      if (!at_word("else")) fail(peek(), "missing 'else' branch: expected 'else' but found " + describe(peek()));
      take();
      if (peek().kind == Tok::End) fail(peek(), "missing 'else' branch");
      const std::size_t f_branch = branch(depth);
      auto& c = std::get<Check>(spec_.nodes[slot]);
      c.if_true = t_branch;
      c.if_false = f_branch;
      return slot;
    }
    fail(t, "expected 'if', 'do' or '(' but found " + describe(t));
  }

  std::size_t branch(std::size_t depth) {
    const Token& t = peek();
    if (t.kind == Tok::Ident && !is_keyword(t.text)) {
      take();
      return action(t);
    }
    return expr(depth + 1);
  }

  Term term(double sign) {
    double coefficient = 1.0;
    if (peek().kind == Tok::Number) {
      coefficient = take().number;
      if (peek().kind == Tok::Star) take();
    }
    const Token& f = peek();
    if (f.kind != Tok::Ident || is_keyword(f.text)) fail(f, "expected feature name but found " + describe(f));
    take();
    auto it = std::find(features_.begin(), features_.end(), f.text);
    if (it == features_.end()) fail(f, "unknown feature '" + f.text + "'");
    return {static_cast<std::size_t>(it - features_.begin()), sign * coefficient};
  }

  Check condition() {
    Check c;
    double sign = 1.0;
    if (peek().kind == Tok::Minus) {
      take();
      sign = -1.0;
    }
    c.terms.push_back(term(sign));
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      sign = take().kind == Tok::Minus ? -1.0 : 1.0;
      c.terms.push_back(term(sign));
    }
    const Token& op = peek();
    if (op.kind == Tok::Greater) {
      c.op = Comparison::Greater;
    } else if (op.kind == Tok::Less) {
      c.op = Comparison::Less;
    } else {
      fail(op, "expected '>' or '<' but found " + describe(op));
    }
    take();
    double value_sign = 1.0;
    if (peek().kind == Tok::Minus) {
      take();
      value_sign = -1.0;
    }
    if (peek().kind != Tok::Number) fail(peek(), "expected comparison value but found " + describe(peek()));
    c.value = value_sign * take().number;
    return c;
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::span<const std::string> features_;
  std::span<const std::string> actions_;
  TreeSpec spec_;
};

}  // namespace

TreeSpec parse_tree(std::string_view source, std::span<const std::string> feature_names,
                    std::span<const std::string> action_names) {
  TreeSpec spec = Parser(tokenize(source), feature_names, action_names).run();
  spec.validate();
  return spec;
}

namespace {

void format_node(const TreeSpec& spec, std::size_t i, bool nested, std::ostringstream& out) {
  std::visit(overloaded{
                 [&](const Check& c) {
                   if (nested) out << '(';
                   out << "if ";
                   for (std::size_t k = 0; k < c.terms.size(); ++k) {
                     double coef = c.terms[k].coefficient;
                     if (k > 0) {
                       out << (coef < 0 ? " - " : " + ");
                       coef = std::abs(coef);
                     } else if (coef < 0) {
                       out << '-';
                       coef = -coef;
                     }
                     if (coef != 1.0) out << format_number(coef) << '*';
                     out << spec.feature_names[c.terms[k].feature];
                   }
                   out << (c.op == Comparison::Greater ? " > " : " < ") << format_number(c.value);
                   out << " then ";
                   format_node(spec, c.if_true, true, out);
                   out << " else ";
                   format_node(spec, c.if_false, true, out);
                   if (nested) out << ')';
                 },
                 [&](const ActionLeaf& a) {
                   if (!nested) out << "do ";
                   out << spec.action_names[a.action];
                 },
             },
             spec.nodes[i]);
}

}  // namespace

std::string format_tree(const TreeSpec& spec) {
  std::ostringstream out;
  format_node(spec, spec.root, false, out);
  return out.str();
}

// ---------------------------------------------------------------------------
// Compilation

namespace {

void compile_node(const TreeSpec& spec, std::size_t i, std::vector<PathStep>& path, ProLoNet& net) {
  const auto& node = spec.nodes[i];
  if (const auto* a = std::get_if<ActionLeaf>(&node)) {
    Leaf leaf;
    leaf.action_weights.assign(net.output_dim, 0.0);
    leaf.action_weights[a->action] = 1.0;
    leaf.path = path;
    net.leaves.push_back(std::move(leaf));
    return;
  }
  const auto& c = std::get<Check>(node);
  const double sign = c.op == Comparison::Greater ? 1.0 : -1.0;
  DecisionNode d;
  d.weights.assign(net.input_dim, 0.0);
  for (const auto& t : c.terms) d.weights[t.feature] += sign * t.coefficient;
  d.comparator = sign * c.value;
  d.alpha = 1.0;
  const std::size_t id = net.nodes.size();
  net.nodes.push_back(std::move(d));

  path.push_back({id, Polarity::True});
  compile_node(spec, c.if_true, path, net);
  path.back().polarity = Polarity::False;
  compile_node(spec, c.if_false, path, net);
  path.pop_back();
}

}  // namespace

ProLoNet compile_tree(const TreeSpec& spec, std::size_t input_dim, std::size_t output_dim) {
  spec.validate();
  for (const auto& node : spec.nodes) {
    if (const auto* c = std::get_if<Check>(&node)) {
      for (const auto& t : c->terms) {
        if (t.feature >= input_dim) {
          throw InvalidInput("compile_tree: feature index " + std::to_string(t.feature) +
                             " out of range for input_dim " + std::to_string(input_dim));
        }
      }
    } else if (std::get<ActionLeaf>(node).action >= output_dim) {
      throw InvalidInput("compile_tree: action index " + std::to_string(std::get<ActionLeaf>(node).action) +
                         " out of range for output_dim " + std::to_string(output_dim));
    }
  }
  ProLoNet net;
  net.input_dim = input_dim;
  net.output_dim = output_dim;
  std::vector<PathStep> path;
  compile_node(spec, spec.root, path, net);
  net.validate();
  return net;
}

std::string structure_summary(const ProLoNet& net) {
  const auto n = net.nodes.size();
  const auto l = net.leaves.size();
  return std::to_string(n) + (n == 1 ? " node, " : " nodes, ") + std::to_string(l) + (l == 1 ? " leaf" : " leaves");
}

std::size_t heuristic_act(const TreeSpec& spec, std::span<const double> state) {
  if (state.size() < spec.feature_names.size()) throw InvalidInput("heuristic_act: state too short");
  std::size_t i = spec.root;
  while (true) {
    const auto& node = spec.nodes.at(i);
    if (const auto* a = std::get_if<ActionLeaf>(&node)) return a->action;
    const auto& c = std::get<Check>(node);
    const double s = term_sum(c.terms, state);
    const bool holds = c.op == Comparison::Greater ? s > c.value : s < c.value;
    i = holds ? c.if_true : c.if_false;
  }
}

// ---------------------------------------------------------------------------
// Mistake injection

std::size_t mistake_cap(double rate, std::size_t size) {
  const double cap = std::ceil(2.0 * rate * static_cast<double>(size) - 1e-9);
  return std::min(size, static_cast<std::size_t>(std::max(0.0, cap)));
}

namespace {

std::vector<std::size_t> draw_mistakes(std::size_t size, double rate, std::mt19937_64& rng) {
  std::vector<std::size_t> order(size);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(rate);
  const std::size_t cap = mistake_cap(rate, size);
  std::vector<std::size_t> chosen;
  for (std::size_t idx : order) {
    if (coin(rng) && chosen.size() < cap) chosen.push_back(idx);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

}  // namespace

ProLoNet inject_mistakes(const ProLoNet& net, const MistakeConfig& cfg, MistakeReport* report) {
  if (!(cfg.rate >= 0.0 && cfg.rate <= 0.5)) throw InvalidInput("mistake rate must be in [0, 0.5]");
  ProLoNet out = net;
  std::mt19937_64 rng(cfg.seed);
  MistakeReport r;
  r.weights = draw_mistakes(out.nodes.size(), cfg.rate, rng);
  r.comparators = draw_mistakes(out.nodes.size(), cfg.rate, rng);
  r.leaves = draw_mistakes(out.leaves.size(), cfg.rate, rng);
  for (auto n : r.weights) {
    for (auto& w : out.nodes[n].weights) w = -w;
  }
  for (auto n : r.comparators) out.nodes[n].comparator = -out.nodes[n].comparator;
  for (auto l : r.leaves) {
    for (auto& a : out.leaves[l].action_weights) a = -a;
  }
  if (report) *report = std::move(r);
  return out;
}

// ---------------------------------------------------------------------------
// Random initialization

namespace {

struct RandomBuilder {
  std::mt19937_64 rng;
  ProLoNet net;
  std::vector<PathStep> path;

  void build(std::size_t internal) {
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    if (internal == 0) {
      std::uniform_real_distribution<double> pos(0.0, 1.0);
      Leaf leaf;
      leaf.action_weights.resize(net.output_dim);
      for (auto& a : leaf.action_weights) a = pos(rng);
      leaf.path = path;
      net.leaves.push_back(std::move(leaf));
      return;
    }
    DecisionNode d;
    d.weights.resize(net.input_dim);
    for (auto& w : d.weights) w = sym(rng);
    d.comparator = sym(rng);
    const std::size_t id = net.nodes.size();
    net.nodes.push_back(std::move(d));
    const std::size_t left = std::uniform_int_distribution<std::size_t>(0, internal - 1)(rng);
    path.push_back({id, Polarity::True});
    build(left);
    path.back().polarity = Polarity::False;
    build(internal - 1 - left);
    path.pop_back();
  }
};

}  // namespace

ProLoNet random_prolonet(std::size_t nodes, std::size_t leaves, std::size_t input_dim, std::size_t output_dim,
                         std::uint64_t seed) {
  if (leaves != nodes + 1) {
    throw InvalidInput("random_prolonet: a full binary tree with " + std::to_string(nodes) + " nodes has " +
                       std::to_string(nodes + 1) + " leaves, not " + std::to_string(leaves));
  }
  RandomBuilder b{std::mt19937_64(seed), {}, {}};
  b.net.input_dim = input_dim;
  b.net.output_dim = output_dim;
  b.build(nodes);
  b.net.validate();
  return std::move(b.net);
}

// ---------------------------------------------------------------------------
// treespec-v1

namespace {

json check_to_json(const TreeSpec& spec, const Check& c) {
  json terms = json::array();
  for (const auto& t : c.terms) {
    terms.push_back({{"feature", spec.feature_names[t.feature]}, {"coefficient", t.coefficient}});
  }
  return {{"terms", std::move(terms)}, {"op", c.op == Comparison::Greater ? ">" : "<"}, {"value", c.value}};
}

json node_to_json(const TreeSpec& spec, std::size_t i) {
  const auto& node = spec.nodes[i];
  if (const auto* a = std::get_if<ActionLeaf>(&node)) return {{"action", spec.action_names[a->action]}};
  const auto& c = std::get<Check>(node);
  return {{"check", check_to_json(spec, c)},
          {"true", node_to_json(spec, c.if_true)},
          {"false", node_to_json(spec, c.if_false)}};
}

class JsonTreeReader {
 public:
  JsonTreeReader(TreeSpec& spec, std::span<const CheckTemplate> templates, std::vector<TreeSpecIssue>& issues)
      : spec_(spec), templates_(templates), issues_(issues) {}

  std::size_t node(const json& j, const std::string& path, std::size_t depth) {
    const std::size_t slot = spec_.nodes.size();
    spec_.nodes.emplace_back(ActionLeaf{0});
    if (depth > kMaxDepth) {
      issue(path, "tree is deeper than " + std::to_string(kMaxDepth));
      return slot;
    }
    if (!j.is_object()) {
      issue(path, "node must be an object");
      return slot;
    }
    const bool has_action = j.contains("action");
    const bool has_check = j.contains("check");
    if (has_action == has_check) {
      issue(path, "node must have exactly one of \"action\" or \"check\"");
      return slot;
    }
    if (has_action) {
      if (!j["action"].is_string()) {
        issue(path + "/action", "action must be a string");
        return slot;
      }
      const auto name = j["action"].get<std::string>();
      auto it = std::find(spec_.action_names.begin(), spec_.action_names.end(), name);
      if (it == spec_.action_names.end()) {
        issue(path + "/action", "unknown action '" + name + "'");
      } else {
        spec_.nodes[slot] = ActionLeaf{static_cast<std::size_t>(it - spec_.action_names.begin())};
      }
      return slot;
    }
    Check c = check(j["check"], path + "/check");
    for (const char* side : {"true", "false"}) {
      if (!j.contains(side)) issue(path, std::string("missing \"") + side + "\" branch");
    }
    if (j.contains("true")) c.if_true = node(j["true"], path + "/true", depth + 1);
    if (j.contains("false")) c.if_false = node(j["false"], path + "/false", depth + 1);
    spec_.nodes[slot] = std::move(c);
    return slot;
  }

 private:
  void issue(const std::string& path, const std::string& msg) { issues_.push_back({path, msg}); }

  bool feature(const json& name, const std::string& path, std::size_t& out) {
    if (!name.is_string()) {
      issue(path, "feature must be a string");
      return false;
    }
    const auto s = name.get<std::string>();
    auto it = std::find(spec_.feature_names.begin(), spec_.feature_names.end(), s);
    if (it == spec_.feature_names.end()) {
      issue(path, "unknown feature '" + s + "'");
      return false;
    }
    out = static_cast<std::size_t>(it - spec_.feature_names.begin());
    return true;
  }

  bool number(const json& j, const std::string& path, double& out) {
    if (!j.is_number() || !std::isfinite(j.get<double>())) {
      issue(path, "expected a finite number");
      return false;
    }
    out = j.get<double>();
    return true;
  }

  Check check(const json& j, const std::string& path) {
    Check c;
    if (j.is_string()) {
      const auto id = j.get<std::string>();
      auto it = std::find_if(templates_.begin(), templates_.end(), [&](const CheckTemplate& t) { return t.id == id; });
      if (it == templates_.end()) {
        issue(path, "unknown check '" + id + "'");
        c.terms.push_back({0, 1.0});
      } else {
        c.terms = it->terms;
        c.op = it->op;
        c.value = it->value;
      }
      return c;
    }
    if (!j.is_object()) {
      issue(path, "check must be an object or a check id");
      return c;
    }
    if (j.contains("terms")) {
      if (!j["terms"].is_array() || j["terms"].empty()) {
        issue(path + "/terms", "terms must be a non-empty array");
      } else {
        for (std::size_t k = 0; k < j["terms"].size(); ++k) {
          const auto& t = j["terms"][k];
          const std::string tp = path + "/terms/" + std::to_string(k);
          Term term;
          if (!t.is_object() || !t.contains("feature")) {
            issue(tp, "term needs a \"feature\"");
            continue;
          }
          feature(t["feature"], tp + "/feature", term.feature);
          if (t.contains("coefficient")) number(t["coefficient"], tp + "/coefficient", term.coefficient);
          c.terms.push_back(term);
        }
      }
    } else if (j.contains("feature")) {
      Term term;
      feature(j["feature"], path + "/feature", term.feature);
      if (j.contains("coefficient")) number(j["coefficient"], path + "/coefficient", term.coefficient);
      c.terms.push_back(term);
    } else {
      issue(path, "check needs \"feature\" or \"terms\"");
    }
    if (!j.contains("op") || !j["op"].is_string() || (j["op"] != ">" && j["op"] != "<")) {
      issue(path + "/op", "op must be \">\" or \"<\"");
    } else {
      c.op = j["op"] == ">" ? Comparison::Greater : Comparison::Less;
    }
    if (!j.contains("value")) {
      issue(path, "check needs a \"value\"");
    } else {
      number(j["value"], path + "/value", c.value);
    }
    if (c.terms.empty()) c.terms.push_back({0, 1.0});
    return c;
  }

  TreeSpec& spec_;
  std::span<const CheckTemplate> templates_;
  std::vector<TreeSpecIssue>& issues_;
};

std::vector<std::string> name_list(const json& doc, const char* key, std::span<const std::string> fallback,
                                   std::vector<TreeSpecIssue>& issues) {
  if (!doc.contains(key)) return {fallback.begin(), fallback.end()};
  const auto& arr = doc[key];
  if (!arr.is_array() || arr.empty() || !std::all_of(arr.begin(), arr.end(), [](const json& v) { return v.is_string(); })) {
    issues.push_back({std::string("/") + key, "must be a non-empty array of strings"});
    return {fallback.begin(), fallback.end()};
  }
  return arr.get<std::vector<std::string>>();
}

}  // namespace

json to_json(const TreeSpec& spec) {
  return {{"format", kTreeSpecFormat},
          {"features", spec.feature_names},
          {"actions", spec.action_names},
          {"root", node_to_json(spec, spec.root)}};
}

TreeSpec treespec_from_json(const json& doc, std::span<const std::string> feature_names,
                            std::span<const std::string> action_names, std::span<const CheckTemplate> templates,
                            std::vector<TreeSpecIssue>& issues) {
  TreeSpec spec;
  if (!doc.is_object()) {
    issues.push_back({"", "tree document must be an object"});
    return spec;
  }
  if (doc.contains("format") && doc["format"] != kTreeSpecFormat) {
    issues.push_back({"/format", std::string("expected \"") + kTreeSpecFormat + "\""});
  }
  spec.feature_names = name_list(doc, "features", feature_names, issues);
  spec.action_names = name_list(doc, "actions", action_names, issues);
  if (spec.feature_names.empty()) issues.push_back({"/features", "no feature vocabulary"});
  if (spec.action_names.empty()) issues.push_back({"/actions", "no action vocabulary"});
  if (!doc.contains("root")) {
    issues.push_back({"/root", "missing root node"});
    return spec;
  }
  JsonTreeReader reader(spec, templates, issues);
  spec.root = reader.node(doc["root"], "/root", 0);
  if (issues.empty()) {
    try {
      spec.validate();
    } catch (const InvalidInput& e) {
      issues.push_back({"/root", e.what()});
    }
  }
  return spec;
}

}  // namespace prolonet
