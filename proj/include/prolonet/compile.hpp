#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "prolonet/core.hpp"

namespace prolonet {

// ---------------------------------------------------------------------------
// Decision-tree policies as written by people.
//
// Textual form (whitespace, including newlines, is insignificant; `#` starts a
// comment):
//
//   tree   := expr
//   expr   := "do" ACTION
//           | "if" cond "then" branch "else" branch
//           | "(" expr ")"
//   branch := expr | ACTION
//   cond   := sum (">" | "<") NUMBER
//   sum    := ["-"] term (("+" | "-") term)*
//   term   := [NUMBER ["*"]] FEATURE
//
// Example: `if x_position > 0 then left else right`.

enum class Comparison { Greater, Less };

struct Term {
  std::size_t feature = 0;
  double coefficient = 1.0;

  bool operator==(const Term&) const = default;
};

struct Check {
  std::vector<Term> terms;
  Comparison op = Comparison::Greater;
  double value = 0.0;
  std::size_t if_true = 0;   // index into TreeSpec::nodes
  std::size_t if_false = 0;

  bool operator==(const Check&) const = default;
};

struct ActionLeaf {
  std::size_t action = 0;

  bool operator==(const ActionLeaf&) const = default;
};

using RuleNode = std::variant<Check, ActionLeaf>;

/// Arena-allocated rule tree; `root` and the children of every Check index
/// into `nodes`.
struct TreeSpec {
  std::vector<std::string> feature_names;
  std::vector<std::string> action_names;
  std::vector<RuleNode> nodes;
  std::size_t root = 0;

  const RuleNode& at(std::size_t i) const { return nodes.at(i); }
  const RuleNode& root_node() const { return nodes.at(root); }

  std::size_t check_count() const;
  std::size_t leaf_count() const;

  /// Throws InvalidInput when an index is out of range, a check is malformed
  /// or the structure is not a finite tree.
  void validate() const;
};

/// Syntax or name-resolution error in tree source, with 1-based position.
class ParseError : public InvalidInput {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message);

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

TreeSpec parse_tree(std::string_view source, std::span<const std::string> feature_names,
                    std::span<const std::string> action_names);

/// Renders `spec` back to tree source; parse_tree(format_tree(s)) == s.
std::string format_tree(const TreeSpec& spec);

/// One node per check (weights from the check's terms, negated for `<`), one
/// one-hot leaf per action, alpha = 1. Nodes and leaves are numbered in
/// pre-order with the TRUE branch first.
ProLoNet compile_tree(const TreeSpec& spec, std::size_t input_dim, std::size_t output_dim);

/// "1 node, 2 leaves".
std::string structure_summary(const ProLoNet& net);

/// Crisp root-to-leaf traversal.
std::size_t heuristic_act(const TreeSpec& spec, std::span<const double> state);

struct MistakeConfig {
  double rate = 0.0;  // N, in [0, 0.5]
  std::uint64_t seed = 0;
};

/// Number of items in a category of `size` that may be negated at `rate`.
std::size_t mistake_cap(double rate, std::size_t size);

struct MistakeReport {
  std::vector<std::size_t> weights;      // negated node weight vectors
  std::vector<std::size_t> comparators;  // negated comparators
  std::vector<std::size_t> leaves;       // negated leaf vectors
};

/// Negates node weight vectors, comparators and leaf vectors independently
/// per category. Items are visited in a seeded random order and each is
/// negated with probability `rate` until the category reaches
/// mistake_cap(rate, size).
ProLoNet inject_mistakes(const ProLoNet& net, const MistakeConfig& cfg, MistakeReport* report = nullptr);

/// Random full binary tree with `nodes` decision nodes and nodes + 1 leaves.
/// Weights and comparators ~ U(-1, 1), leaf weights ~ U(0, 1), alpha = 1.
ProLoNet random_prolonet(std::size_t nodes, std::size_t leaves, std::size_t input_dim,
                         std::size_t output_dim, std::uint64_t seed);

// treespec-v1 JSON ----------------------------------------------------------

inline constexpr const char* kTreeSpecFormat = "treespec-v1";

struct TreeSpecIssue {
  std::string path;  // JSON pointer to the offending node
  std::string message;
};

/// Named check shortcut usable in treespec-v1 documents as {"check": "<id>"}.
struct CheckTemplate {
  std::string id;
  std::string label;
  std::vector<Term> terms;
  Comparison op = Comparison::Greater;
  double value = 0.0;
};

nlohmann::json to_json(const TreeSpec& spec);

/// Parses a treespec-v1 document. Feature and action vocabularies come from
/// the document when present, otherwise from the arguments. All problems are
/// collected into `issues`; the returned spec is only meaningful when
/// `issues` is empty.
TreeSpec treespec_from_json(const nlohmann::json& doc, std::span<const std::string> feature_names,
                            std::span<const std::string> action_names,
                            std::span<const CheckTemplate> templates, std::vector<TreeSpecIssue>& issues);

}  // namespace prolonet
