#include "prolonet/model_io.hpp"

#include <fstream>

namespace prolonet {

using nlohmann::json;

namespace {

void expect_format(const json& doc, const char* format) {
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != format) {
    throw InvalidInput(std::string("expected a document with \"format\": \"") + format + "\"");
  }
}

}  // namespace

json to_json(const ProLoNet& net) {
  json nodes = json::array();
  for (const auto& node : net.nodes) {
    nodes.push_back({{"weights", node.weights}, {"comparator", node.comparator}, {"alpha", node.alpha}});
  }
  json leaves = json::array();
  for (const auto& leaf : net.leaves) {
    json path = json::array();
    for (const auto& step : leaf.path) {
      path.push_back(json::array({step.node, step.polarity == Polarity::True}));
    }
    leaves.push_back({{"action_weights", leaf.action_weights}, {"path", std::move(path)}});
  }
  return {{"format", kProLoNetFormat},
          {"input_dim", net.input_dim},
          {"output_dim", net.output_dim},
          {"nodes", std::move(nodes)},
          {"leaves", std::move(leaves)}};
}

ProLoNet prolonet_from_json(const json& doc) {
  expect_format(doc, kProLoNetFormat);
  ProLoNet net;
  try {
    net.input_dim = doc.at("input_dim").get<std::size_t>();
    net.output_dim = doc.at("output_dim").get<std::size_t>();
    for (const auto& n : doc.at("nodes")) {
      net.nodes.push_back({n.at("weights").get<std::vector<double>>(), n.at("comparator").get<double>(),
                           n.at("alpha").get<double>()});
    }
    for (const auto& l : doc.at("leaves")) {
      Leaf leaf;
      leaf.action_weights = l.at("action_weights").get<std::vector<double>>();
      for (const auto& step : l.at("path")) {
        leaf.path.push_back({step.at(0).get<std::size_t>(),
                             step.at(1).get<bool>() ? Polarity::True : Polarity::False});
      }
      net.leaves.push_back(std::move(leaf));
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed prolonet-v1 document: ") + e.what());
  }
  net.validate();
  return net;
}

json to_json(const MlpPolicy& net) {
  json layers = json::array();
  for (const auto& layer : net.layers) {
    layers.push_back({{"in", layer.in}, {"out", layer.out}, {"weight", layer.weight}, {"bias", layer.bias}});
  }
  return {{"format", kMlpFormat}, {"layers", std::move(layers)}};
}

MlpPolicy mlp_from_json(const json& doc) {
  expect_format(doc, kMlpFormat);
  MlpPolicy net;
  try {
    for (const auto& l : doc.at("layers")) {
      net.layers.push_back({l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(),
                            l.at("weight").get<std::vector<double>>(),
                            l.at("bias").get<std::vector<double>>()});
    }
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed mlp-v1 document: ") + e.what());
  }
  net.validate();
  return net;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << doc.dump(2) << '\n';
}

std::uint64_t json_count(const nlohmann::json& value, const std::string& key) {
  if (!value.is_number_unsigned()) throw InvalidInput(key + " must be a non-negative integer");
  return value.get<std::uint64_t>();
}

}  // namespace prolonet
