#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace prolonet {

/// Raised when an argument violates a documented shape or range contract.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Polarity : std::uint8_t { False = 0, True = 1 };

/// One (node, polarity) pair on the route from the root to a leaf.
struct PathStep {
  std::size_t node = 0;
  Polarity polarity = Polarity::True;

  bool operator==(const PathStep&) const = default;
};

/// Soft rule sigma(alpha * (w . x - c)).
struct DecisionNode {
  std::vector<double> weights;
  double comparator = 0.0;
  double alpha = 1.0;

  bool operator==(const DecisionNode&) const = default;
};

struct Leaf {
  std::vector<double> action_weights;
  std::vector<PathStep> path;

  bool operator==(const Leaf&) const = default;
};

/// Differentiable decision tree. Decision nodes are sigmoid-gated linear
/// checks; the output is the sum of leaf action-weight vectors, each scaled by
/// the probability of reaching that leaf.
struct ProLoNet {
  std::size_t input_dim = 0;
  std::size_t output_dim = 0;
  std::vector<DecisionNode> nodes;
  std::vector<Leaf> leaves;

  /// Throws InvalidInput if dimensions or leaf paths are inconsistent.
  void validate() const;

  bool operator==(const ProLoNet&) const = default;
};

/// Gradient of a scalar loss with respect to every ProLoNet parameter.
/// Layout mirrors the owning network.
struct ProLoNetGradient {
  std::vector<std::vector<double>> weights;
  std::vector<double> comparators;
  std::vector<double> alphas;
  std::vector<std::vector<double>> leaves;

  /// Flattened in the same order as parameters(const ProLoNet&).
  std::vector<double> flatten() const;
};

struct ForwardResult {
  std::vector<double> raw;    // leaf sum
  std::vector<double> probs;  // softmax(raw)
};

/// Argument clamp applied before the sigmoid.
inline constexpr double kSigmoidClamp = 500.0;

double sigmoid(double u);
std::vector<double> softmax(std::span<const double> logits);

double node_activation(const DecisionNode& node, std::span<const double> x);
std::vector<double> node_activations(const ProLoNet& net, std::span<const double> x);

/// Probability of reaching each leaf.
std::vector<double> path_weights(const ProLoNet& net, std::span<const double> x);

ForwardResult forward(const ProLoNet& net, std::span<const double> x);

/// `upstream` is dLoss/d(raw).
ProLoNetGradient backward(const ProLoNet& net, std::span<const double> x,
                          std::span<const double> upstream);

/// Flat parameter view: for each node its weights, comparator and alpha, then
/// every leaf's action weights.
std::vector<double> parameters(const ProLoNet& net);
std::size_t parameter_count(const ProLoNet& net);
void set_parameters(ProLoNet& net, std::span<const double> values);
/// Adds `deltas` elementwise to the flat parameter view.
void apply_update(ProLoNet& net, std::span<const double> deltas);

// ---------------------------------------------------------------------------
// Feed-forward baseline

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // row-major, out x in
  std::vector<double> bias;

  bool operator==(const DenseLayer&) const = default;
};

/// Affine layers with ReLU between them; the final layer is linear.
struct MlpPolicy {
  std::vector<DenseLayer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().in; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().out; }
  void validate() const;

  bool operator==(const MlpPolicy&) const = default;
};

struct MlpGradient {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::vector<double> flatten() const;
};

/// Uniform(-1/sqrt(in), 1/sqrt(in)) for weights and biases.
MlpPolicy random_mlp(std::span<const std::size_t> dims, std::uint64_t seed);

std::vector<double> mlp_forward(const MlpPolicy& net, std::span<const double> x);
MlpGradient mlp_backward(const MlpPolicy& net, std::span<const double> x,
                         std::span<const double> upstream);

std::vector<double> parameters(const MlpPolicy& net);
std::size_t parameter_count(const MlpPolicy& net);
void set_parameters(MlpPolicy& net, std::span<const double> values);
void apply_update(MlpPolicy& net, std::span<const double> deltas);

// Uniform interface used by the trainer: raw outputs (pre-softmax) and the
// flat gradient of a loss seeded at those outputs.
std::vector<double> logits(const ProLoNet& net, std::span<const double> x);
std::vector<double> logits(const MlpPolicy& net, std::span<const double> x);
std::vector<double> flat_gradient(const ProLoNet& net, std::span<const double> x,
                                  std::span<const double> upstream);
std::vector<double> flat_gradient(const MlpPolicy& net, std::span<const double> x,
                                  std::span<const double> upstream);

}  // namespace prolonet
