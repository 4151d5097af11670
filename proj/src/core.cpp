#include "prolonet/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace prolonet {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw InvalidInput(std::string(what) + ": expected length " + std::to_string(want) +
                       ", got " + std::to_string(got));
  }
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double d) { return std::isfinite(d); });
}

}  // namespace

void ProLoNet::validate() const {
  require(input_dim > 0, "ProLoNet: input_dim must be positive");
  require(output_dim > 0, "ProLoNet: output_dim must be positive");
  require(!leaves.empty(), "ProLoNet: at least one leaf required");
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    const auto& node = nodes[n];
    require_dim(node.weights.size(), input_dim, "ProLoNet node weights");
    require(all_finite(node.weights) && std::isfinite(node.comparator) && std::isfinite(node.alpha),
            "ProLoNet: node " + std::to_string(n) + " has non-finite parameters");
  }
  for (std::size_t i = 0; i < leaves.size(); ++i) {
    const auto& leaf = leaves[i];
    require_dim(leaf.action_weights.size(), output_dim, "ProLoNet leaf action_weights");
    for (std::size_t k = 0; k < leaf.path.size(); ++k) {
      require(leaf.path[k].node < nodes.size(),
              "ProLoNet: leaf " + std::to_string(i) + " references unknown node " +
                  std::to_string(leaf.path[k].node));
      require(k == 0 || leaf.path[k - 1].node < leaf.path[k].node,
              "ProLoNet: leaf " + std::to_string(i) + " path is not strictly increasing");
    }
  }
}

std::vector<double> ProLoNetGradient::flatten() const {
  std::vector<double> out;
  for (std::size_t n = 0; n < weights.size(); ++n) {
    out.insert(out.end(), weights[n].begin(), weights[n].end());
    out.push_back(comparators[n]);
    out.push_back(alphas[n]);
  }
  for (const auto& l : leaves) out.insert(out.end(), l.begin(), l.end());
  return out;
}

double sigmoid(double u) {
  u = std::clamp(u, -kSigmoidClamp, kSigmoidClamp);
  return 1.0 / (1.0 + std::exp(-u));
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  if (out.empty()) return out;
  const double top = *std::max_element(out.begin(), out.end());
  double total = 0.0;
  for (auto& v : out) {
    v = std::exp(v - top);
    total += v;
  }
  for (auto& v : out) v /= total;
  return out;
}

namespace {

double pre_activation(const DecisionNode& node, std::span<const double> x) {
  return std::inner_product(node.weights.begin(), node.weights.end(), x.begin(), 0.0) -
         node.comparator;
}

}  // namespace

double node_activation(const DecisionNode& node, std::span<const double> x) {
  require_dim(x.size(), node.weights.size(), "node_activation input");
  return sigmoid(node.alpha * pre_activation(node, x));
}

std::vector<double> node_activations(const ProLoNet& net, std::span<const double> x) {
  require_dim(x.size(), net.input_dim, "ProLoNet input");
  std::vector<double> out(net.nodes.size());
  for (std::size_t n = 0; n < net.nodes.size(); ++n) {
    out[n] = sigmoid(net.nodes[n].alpha * pre_activation(net.nodes[n], x));
  }
  return out;
}

namespace {

double path_weight(const Leaf& leaf, std::span<const double> sigma) {
  double z = 1.0;
  for (const auto& step : leaf.path) {
    const double s = sigma[step.node];
    z *= step.polarity == Polarity::True ? s : 1.0 - s;
  }
  return z;
}

}  // namespace

std::vector<double> path_weights(const ProLoNet& net, std::span<const double> x) {
  const auto sigma = node_activations(net, x);
  std::vector<double> z(net.leaves.size());
  for (std::size_t i = 0; i < net.leaves.size(); ++i) z[i] = path_weight(net.leaves[i], sigma);
  return z;
}

ForwardResult forward(const ProLoNet& net, std::span<const double> x) {
  const auto z = path_weights(net, x);
  ForwardResult result;
  result.raw.assign(net.output_dim, 0.0);
  for (std::size_t i = 0; i < net.leaves.size(); ++i) {
    const auto& l = net.leaves[i].action_weights;
    for (std::size_t k = 0; k < net.output_dim; ++k) result.raw[k] += z[i] * l[k];
  }
  result.probs = softmax(result.raw);
  return result;
}

ProLoNetGradient backward(const ProLoNet& net, std::span<const double> x,
                          std::span<const double> upstream) {
  require_dim(upstream.size(), net.output_dim, "ProLoNet upstream gradient");
  require_dim(x.size(), net.input_dim, "ProLoNet input");

  const std::size_t n_nodes = net.nodes.size();
  std::vector<double> margin(n_nodes), sigma(n_nodes);
  std::vector<bool> clamped(n_nodes);
  for (std::size_t n = 0; n < n_nodes; ++n) {
    margin[n] = pre_activation(net.nodes[n], x);
    const double u = net.nodes[n].alpha * margin[n];
    clamped[n] = std::abs(u) > kSigmoidClamp;
    sigma[n] = sigmoid(u);
  }

  ProLoNetGradient grad;
  grad.weights.assign(n_nodes, std::vector<double>(net.input_dim, 0.0));
  grad.comparators.assign(n_nodes, 0.0);
  grad.alphas.assign(n_nodes, 0.0);
  grad.leaves.resize(net.leaves.size());

  std::vector<double> d_sigma(n_nodes, 0.0);
  std::vector<double> factors, suffix;
  for (std::size_t i = 0; i < net.leaves.size(); ++i) {
    const auto& leaf = net.leaves[i];
    const std::size_t depth = leaf.path.size();
    factors.resize(depth);
    for (std::size_t k = 0; k < depth; ++k) {
      const double s = sigma[leaf.path[k].node];
      factors[k] = leaf.path[k].polarity == Polarity::True ? s : 1.0 - s;
    }
    // suffix[k] = product of factors[k..depth)
    suffix.assign(depth + 1, 1.0);
    for (std::size_t k = depth; k-- > 0;) suffix[k] = suffix[k + 1] * factors[k];
    const double z = suffix[0];

    grad.leaves[i].resize(net.output_dim);
    double g = 0.0;
    for (std::size_t k = 0; k < net.output_dim; ++k) {
      grad.leaves[i][k] = z * upstream[k];
      g += upstream[k] * leaf.action_weights[k];
    }

    double prefix = 1.0;
    for (std::size_t k = 0; k < depth; ++k) {
      const double others = prefix * suffix[k + 1];
      const double sign = leaf.path[k].polarity == Polarity::True ? 1.0 : -1.0;
      d_sigma[leaf.path[k].node] += g * sign * others;
      prefix *= factors[k];
    }
  }

  for (std::size_t n = 0; n < n_nodes; ++n) {
    if (clamped[n]) continue;
    const double du = d_sigma[n] * sigma[n] * (1.0 - sigma[n]);
    const double alpha = net.nodes[n].alpha;
    for (std::size_t j = 0; j < net.input_dim; ++j) grad.weights[n][j] = du * alpha * x[j];
    grad.comparators[n] = -du * alpha;
    grad.alphas[n] = du * margin[n];
  }
  return grad;
}

std::size_t parameter_count(const ProLoNet& net) {
  return net.nodes.size() * (net.input_dim + 2) + net.leaves.size() * net.output_dim;
}

std::vector<double> parameters(const ProLoNet& net) {
  std::vector<double> out;
  out.reserve(parameter_count(net));
  for (const auto& node : net.nodes) {
    out.insert(out.end(), node.weights.begin(), node.weights.end());
    out.push_back(node.comparator);
    out.push_back(node.alpha);
  }
  for (const auto& leaf : net.leaves) {
    out.insert(out.end(), leaf.action_weights.begin(), leaf.action_weights.end());
  }
  return out;
}

namespace {

template <class Fn>
void visit_parameters(ProLoNet& net, std::span<const double> values, Fn&& fn) {
  require_dim(values.size(), parameter_count(net), "ProLoNet parameter vector");
  std::size_t k = 0;
  for (auto& node : net.nodes) {
    for (auto& w : node.weights) fn(w, values[k++]);
    fn(node.comparator, values[k++]);
    fn(node.alpha, values[k++]);
  }
  for (auto& leaf : net.leaves) {
    for (auto& a : leaf.action_weights) fn(a, values[k++]);
  }
}

template <class Fn>
void visit_parameters(MlpPolicy& net, std::span<const double> values, Fn&& fn) {
  require_dim(values.size(), parameter_count(net), "MLP parameter vector");
  std::size_t k = 0;
  for (auto& layer : net.layers) {
    for (auto& w : layer.weight) fn(w, values[k++]);
    for (auto& b : layer.bias) fn(b, values[k++]);
  }
}

}  // namespace

void set_parameters(ProLoNet& net, std::span<const double> values) {
  visit_parameters(net, values, [](double& p, double v) { p = v; });
}

void apply_update(ProLoNet& net, std::span<const double> deltas) {
  visit_parameters(net, deltas, [](double& p, double d) { p += d; });
}

// ---------------------------------------------------------------------------

void MlpPolicy::validate() const {
  require(!layers.empty(), "MlpPolicy: no layers");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& layer = layers[i];
    require(layer.in > 0 && layer.out > 0, "MlpPolicy: empty layer");
    require_dim(layer.weight.size(), layer.in * layer.out, "MlpPolicy layer weight");
    require_dim(layer.bias.size(), layer.out, "MlpPolicy layer bias");
    if (i > 0) require_dim(layer.in, layers[i - 1].out, "MlpPolicy layer input");
  }
}

std::vector<double> MlpGradient::flatten() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.insert(out.end(), weights[i].begin(), weights[i].end());
    out.insert(out.end(), biases[i].begin(), biases[i].end());
  }
  return out;
}

MlpPolicy random_mlp(std::span<const std::size_t> dims, std::uint64_t seed) {
  if (dims.size() < 2) throw InvalidInput("random_mlp: need at least input and output sizes");
  std::mt19937_64 rng(seed);
  MlpPolicy net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    DenseLayer layer{dims[i], dims[i + 1], {}, {}};
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.weight.resize(layer.in * layer.out);
    for (auto& w : layer.weight) w = dist(rng);
    layer.bias.resize(layer.out);
    for (auto& b : layer.bias) b = dist(rng);
    net.layers.push_back(std::move(layer));
  }
  net.validate();
  return net;
}

namespace {

// Returns the input to every layer plus the final output.
std::vector<std::vector<double>> mlp_activations(const MlpPolicy& net, std::span<const double> x) {
  require_dim(x.size(), net.input_dim(), "MLP input");
  std::vector<std::vector<double>> acts;
  acts.emplace_back(x.begin(), x.end());
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    const auto& layer = net.layers[li];
    const auto& in = acts.back();
    std::vector<double> out(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      double s = layer.bias[o];
      for (std::size_t j = 0; j < layer.in; ++j) s += layer.weight[o * layer.in + j] * in[j];
      out[o] = (li + 1 < net.layers.size()) ? std::max(0.0, s) : s;
    }
    acts.push_back(std::move(out));
  }
  return acts;
}

}  // namespace

std::vector<double> mlp_forward(const MlpPolicy& net, std::span<const double> x) {
  return mlp_activations(net, x).back();
}

MlpGradient mlp_backward(const MlpPolicy& net, std::span<const double> x,
                         std::span<const double> upstream) {
  require_dim(upstream.size(), net.output_dim(), "MLP upstream gradient");
  const auto acts = mlp_activations(net, x);
  MlpGradient grad;
  grad.weights.resize(net.layers.size());
  grad.biases.resize(net.layers.size());

  std::vector<double> delta(upstream.begin(), upstream.end());
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const auto& layer = net.layers[li];
    const auto& in = acts[li];
    grad.weights[li].assign(layer.in * layer.out, 0.0);
    grad.biases[li] = delta;
    std::vector<double> next(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      for (std::size_t j = 0; j < layer.in; ++j) {
        grad.weights[li][o * layer.in + j] = delta[o] * in[j];
        next[j] += delta[o] * layer.weight[o * layer.in + j];
      }
    }
    if (li > 0) {
      // in[j] is a ReLU output of the previous layer
      for (std::size_t j = 0; j < layer.in; ++j) {
        if (in[j] <= 0.0) next[j] = 0.0;
      }
    }
    delta = std::move(next);
  }
  return grad;
}

std::size_t parameter_count(const MlpPolicy& net) {
  std::size_t n = 0;
  for (const auto& layer : net.layers) n += layer.weight.size() + layer.bias.size();
  return n;
}

std::vector<double> parameters(const MlpPolicy& net) {
  std::vector<double> out;
  out.reserve(parameter_count(net));
  for (const auto& layer : net.layers) {
    out.insert(out.end(), layer.weight.begin(), layer.weight.end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

void set_parameters(MlpPolicy& net, std::span<const double> values) {
  visit_parameters(net, values, [](double& p, double v) { p = v; });
}

void apply_update(MlpPolicy& net, std::span<const double> deltas) {
  visit_parameters(net, deltas, [](double& p, double d) { p += d; });
}

std::vector<double> logits(const ProLoNet& net, std::span<const double> x) {
  return forward(net, x).raw;
}

std::vector<double> logits(const MlpPolicy& net, std::span<const double> x) {
  return mlp_forward(net, x);
}

std::vector<double> flat_gradient(const ProLoNet& net, std::span<const double> x,
                                  std::span<const double> upstream) {
  return backward(net, x, upstream).flatten();
}

std::vector<double> flat_gradient(const MlpPolicy& net, std::span<const double> x,
                                  std::span<const double> upstream) {
  return mlp_backward(net, x, upstream).flatten();
}

}  // namespace prolonet
