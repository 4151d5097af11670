#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prolonet/agents.hpp"
#include "prolonet/compile.hpp"
#include "prolonet/domain.hpp"
#include "prolonet/growth.hpp"
#include "prolonet/model_io.hpp"
#include "prolonet/runner.hpp"
#include "prolonet/service.hpp"
#include "prolonet/train.hpp"

namespace py = pybind11;
using namespace prolonet;

// JSON crosses the boundary as text; the Python package decodes it.

namespace {

std::string compile_source(const std::string& domain, const std::string& source) {
  const Domain d = parse_domain(domain);
  const auto& info = domain_info(d);
  const auto spec = parse_domain_tree(d, source);
  return to_json(compile_tree(spec, info.feature_names.size(), info.action_names.size())).dump();
}

py::tuple forward_model(const std::string& model, const std::vector<double>& x) {
  const auto net = prolonet_from_json(nlohmann::json::parse(model));
  auto out = forward(net, x);
  return py::make_tuple(out.raw, out.probs);
}

std::string evaluate_agent(const std::string& domain, const std::string& agent, std::size_t episodes,
                           std::uint64_t seed, const std::string& tree_source, const std::string& model) {
  const Domain d = parse_domain(domain);
  Agent a;
  if (!model.empty()) {
    a = agent_from_json(nlohmann::json::parse(model), d);
  } else {
    std::optional<TreeSpec> spec;
    if (!tree_source.empty()) spec = parse_domain_tree(d, tree_source);
    AgentOptions opts;
    opts.growth = false;
    a = build_agent(parse_agent_kind(agent), d, spec, seed, opts);
  }
  EvalResult r;
  {
    py::gil_scoped_release release;
    r = evaluate(a, *make_env(d), episodes, seed);
  }
  return nlohmann::json{{"mean", r.mean},
                        {"stddev", r.stddev},
                        {"mean_length", r.mean_length},
                        {"mean_fire_distance", r.mean_fire_distance},
                        {"rewards", r.rewards}}
      .dump();
}

std::string train_run(const std::string& config, const std::string& out_dir) {
  const RunConfig cfg = run_config_from_json(nlohmann::json::parse(config));
  std::optional<std::filesystem::path> dir;
  if (!out_dir.empty()) dir = out_dir;
  RunResult r;
  {
    py::gil_scoped_release release;
    r = run_training(cfg, dir);
  }
  auto doc = summary_json(cfg, r);
  doc["mean_curve"] = r.mean_curve;
  return doc.dump();
}

py::tuple compile_json(const std::string& body) {
  const auto resp = compile_request(nlohmann::json::parse(body));
  return py::make_tuple(resp.status, resp.body.dump());
}

}  // namespace

PYBIND11_MODULE(_prolonet, m) {
  m.doc() = "ProLoNet core bindings";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);

  m.def("compile_source", &compile_source, py::arg("domain"), py::arg("source"));
  m.def("compile_request", &compile_json, py::arg("body"));
  m.def("forward", &forward_model, py::arg("model"), py::arg("x"));
  m.def("evaluate", &evaluate_agent, py::arg("domain"), py::arg("agent") = "heuristic", py::arg("episodes") = 10,
        py::arg("seed") = 0, py::arg("tree_source") = "", py::arg("model") = "");
  m.def("train", &train_run, py::arg("config"), py::arg("out_dir") = "");
  m.def("vocabulary", [](const std::string& domain) { return vocabulary_json(parse_domain(domain)).dump(); },
        py::arg("domain"));
  m.def("leaf_entropy", [](const std::vector<double>& w) { return leaf_entropy(w); }, py::arg("action_weights"));
  m.def("mistake_cap", &mistake_cap, py::arg("rate"), py::arg("size"));
}
