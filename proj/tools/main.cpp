#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "prolonet/agents.hpp"
#include "prolonet/compile.hpp"
#include "prolonet/domain.hpp"
#include "prolonet/model_io.hpp"
#include "prolonet/runner.hpp"
#include "prolonet/service.hpp"
#include "prolonet/train.hpp"

namespace fs = std::filesystem;
using namespace prolonet;

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot read " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Flags shared by train and ablate.
struct RunFlags {
  std::string domain = "cartpole";
  std::string agent = "prolonet";
  std::string tree;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t episodes = 1000;
  double mistake_rate = 0.0;
  std::string loss = "clip";
  std::optional<std::size_t> loki_n;
  bool rollback = false;
  bool no_growth = false;
  bool stop_when_solved = false;
  std::optional<double> epsilon;
  std::optional<double> learning_rate;
  std::optional<std::size_t> workers;
  std::size_t eval_episodes = 50;
  std::string config;
  std::size_t parallel = 0;

  void add(CLI::App& cmd, bool with_episodes = true) {
    cmd.add_option("--domain", domain, "cartpole or wildfire")->capture_default_str();
    cmd.add_option("--agent", agent, "prolonet, random_prolonet, mlp, heuristic or loki")->capture_default_str();
    cmd.add_option("--tree", tree, "tree source file (.tree); defaults to the domain's built-in tree");
    cmd.add_option("--seeds", seeds, "comma-separated seeds")->delimiter(',')->capture_default_str();
    if (with_episodes) cmd.add_option("--episodes", episodes)->capture_default_str();
    cmd.add_option("--mistake-rate", mistake_rate, "negation rate N in [0, 0.5]")->capture_default_str();
    cmd.add_option("--loss", loss, "clip or kl")->capture_default_str();
    cmd.add_option("--loki-n", loki_n, "imitation episodes (default 200 for loki, else 0)");
    cmd.add_flag("--rollback", rollback, "probe before and after each update and undo regressions");
    cmd.add_flag("--no-growth", no_growth, "disable dynamic growth");
    cmd.add_flag("--stop-when-solved", stop_when_solved, "end a seed once its running mean reaches the target");
    cmd.add_option("--epsilon", epsilon, "growth threshold");
    cmd.add_option("--lr", learning_rate, "learning rate");
    cmd.add_option("--workers", workers, "episodes pooled per update");
    cmd.add_option("--eval-episodes", eval_episodes, "episodes for initial/final evaluation")->capture_default_str();
    cmd.add_option("--config", config, "JSON run config; its keys override flags");
    cmd.add_option("--parallel", parallel, "seeds trained at once (0 = one per core)");
  }

  RunConfig build() const {
    RunConfig cfg;
    cfg.domain = parse_domain(domain);
    cfg.agent = parse_agent_kind(agent);
    if (!tree.empty()) cfg.tree_source = read_text(tree);
    cfg.seeds = seeds;
    cfg.episodes = episodes;
    cfg.mistake_rate = mistake_rate;
    cfg.eval_episodes = eval_episodes;
    cfg.trainer.loss = parse_loss_variant(loss);
    cfg.trainer.loki_n = loki_n.value_or(cfg.agent == AgentKind::Loki ? 200 : 0);
    cfg.trainer.rollback = rollback;
    cfg.trainer.growth = !no_growth;
    cfg.stop_when_solved = stop_when_solved;
    if (epsilon) cfg.trainer.growth_config.epsilon = *epsilon;
    if (learning_rate) cfg.trainer.learning_rate = *learning_rate;
    if (workers) cfg.trainer.workers = *workers;
    if (!config.empty()) return run_config_from_json(read_json_file(config), cfg);
    cfg.validate();
    return cfg;
  }
};

int cmd_compile(const std::string& tree_path, const std::string& domain_name, const std::string& out, bool print) {
  const Domain domain = parse_domain(domain_name);
  const auto& info = domain_info(domain);
  const TreeSpec spec = parse_domain_tree(domain, read_text(tree_path));
  const ProLoNet net = compile_tree(spec, info.feature_names.size(), info.action_names.size());
  std::cout << structure_summary(net) << '\n';
  if (!out.empty()) write_json_file(out, to_json(net));
  if (print) std::cout << to_json(net).dump(2) << '\n';
  return 0;
}

int cmd_train(const RunFlags& flags, const std::string& out) {
  const RunConfig cfg = flags.build();
  std::optional<fs::path> dir;
  if (!out.empty()) dir = out;
  const auto result = run_training(cfg, dir, {}, flags.parallel);
  std::cout << std::fixed << std::setprecision(3);
  for (const auto& s : result.seeds) {
    std::cout << "seed " << s.seed << ": initial " << s.initial.mean << ", final " << s.final.mean
              << ", mean training reward " << s.mean_training_reward() << ", best running mean "
              << s.best_running_mean;
    if (s.solved_episode) std::cout << ", solved at episode " << *s.solved_episode;
    std::cout << '\n';
  }
  std::cout << "best running mean across seeds: " << result.best_mean_running << '\n';
  return result.seeds.size() == cfg.seeds.size() ? 0 : 1;
}

int cmd_eval(const std::string& model, const std::string& domain_name, const std::string& agent_name,
             const std::string& tree, std::size_t episodes, std::uint64_t seed, bool greedy,
             const std::string& trace, const std::string& dump) {
  const Domain domain = parse_domain(domain_name);
  Agent agent;
  if (!model.empty()) {
    agent = load_agent_file(model, domain);
  } else {
    std::optional<TreeSpec> spec;
    if (!tree.empty()) spec = parse_domain_tree(domain, read_text(tree));
    AgentOptions opts;
    opts.growth = false;
    agent = build_agent(parse_agent_kind(agent_name), domain, spec, seed, opts);
  }
  const auto env = make_env(domain);

  std::ofstream trace_out;
  StepObserver observer;
  if (!trace.empty()) {
    trace_out.open(trace);
    if (!trace_out) throw InvalidInput("cannot write " + trace);
    trace_out << std::setprecision(10) << "episode,step";
    for (const auto& h : env->trace_header()) trace_out << ',' << h;
    trace_out << '\n';
    observer = [&trace_out, episode = std::size_t{0}, started = false](const Env& e, std::size_t step) mutable {
      if (step == 0 && started) ++episode;
      started = true;
      trace_out << episode << ',' << step;
      for (double v : e.trace_row()) trace_out << ',' << v;
      trace_out << '\n';
    };
  }
  std::vector<Rollout> rollouts;
  const EvalResult total = evaluate(agent, *env, episodes, seed, greedy, observer, dump.empty() ? nullptr : &rollouts);

  if (!dump.empty()) {
    std::ofstream out(dump);
    if (!out) throw InvalidInput("cannot write " + dump);
    for (std::size_t e = 0; e < rollouts.size(); ++e) {
      for (std::size_t a = 0; a < rollouts[e].per_agent.size(); ++a) {
        const auto& tr = rollouts[e].per_agent[a].transitions;
        for (std::size_t t = 0; t < tr.size(); ++t) {
          out << nlohmann::json{{"episode", e},   {"agent", a},           {"t", t},
                                {"state", tr[t].state}, {"action", tr[t].action}, {"probs", tr[t].action_probs},
                                {"reward", tr[t].reward}}
                     .dump()
              << '\n';
        }
      }
    }
  }
  std::cout << std::fixed << std::setprecision(4) << "episodes " << episodes << " mean " << total.mean << " stddev "
            << total.stddev << " mean_length " << total.mean_length;
  if (domain == Domain::Wildfire) std::cout << " mean_fire_distance " << total.mean_fire_distance;
  std::cout << '\n';
  return 0;
}

int cmd_ablate(const RunFlags& flags, const std::vector<double>& rates, const std::string& out) {
  const RunConfig cfg = flags.build();
  const auto rows = run_ablation(cfg, rates, flags.parallel);
  std::ostringstream table;
  table << std::setprecision(10)
        << "mistake_rate,mean_initial_reward,stddev_initial_reward,mean_training_reward,stddev_training_reward\n";
  for (const auto& r : rows) {
    table << r.mistake_rate << ',' << r.mean_initial << ',' << r.stddev_initial << ',';
    if (cfg.episodes > 0) table << r.mean_training << ',' << r.stddev_training;
    else table << ',';
    table << '\n';
  }
  std::cout << table.str();
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw InvalidInput("cannot write " + out);
    f << table.str();
  }
  return 0;
}

int cmd_diverge(const std::string& init, const std::string& dir, const std::string& out) {
  auto doc = read_json_file(init);
  if (doc.is_object() && doc.contains("model")) doc = doc["model"];
  const ProLoNet net = prolonet_from_json(doc);
  const auto records = divergence_from_dir(net, dir);
  if (!out.empty()) write_divergence_csv(out, records);
  std::cout << "checkpoint,mse_weights,mse_comparators,mse_leaves\n" << std::setprecision(10);
  for (const auto& r : records) {
    std::cout << r.checkpoint << ',' << r.mse_weights << ',' << r.mse_comparators << ',' << r.mse_leaves << '\n';
  }
  return 0;
}

int cmd_serve(std::string host, int port, const std::string& out, std::size_t jobs) {
  if (const char* bind = std::getenv("PROLONET_BIND"); bind && host.empty()) {
    const std::string b = bind;
    const auto colon = b.rfind(':');
    host = b.substr(0, colon);
    if (colon != std::string::npos) port = std::stoi(b.substr(colon + 1));
  }
  if (host.empty()) host = "127.0.0.1";
  ServiceOptions opts;
  opts.max_concurrent_jobs = jobs;
  if (!out.empty()) opts.out_root = out;
  Service service(opts);
  std::cout << "listening on " << host << ':' << port << std::endl;
  if (!service.listen(host, port)) {
    std::cerr << "error: cannot bind " << host << ':' << port << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compile decision-tree policies into ProLoNets, train and evaluate them"};
  app.require_subcommand(1);

  auto* compile = app.add_subcommand("compile", "compile a tree file and print its size");
  std::string c_tree, c_domain = "cartpole", c_out;
  bool c_print = false;
  compile->add_option("tree", c_tree, "tree source file")->required();
  compile->add_option("--domain", c_domain)->capture_default_str();
  compile->add_option("--out", c_out, "write the prolonet-v1 model here");
  compile->add_flag("--print", c_print, "print the model JSON");

  auto* train = app.add_subcommand("train", "train across seeds");
  RunFlags t_flags;
  std::string t_out;
  t_flags.add(*train);
  train->add_option("--out", t_out, "output directory");

  auto* eval = app.add_subcommand("eval", "evaluate a model or a built agent");
  std::string e_model, e_domain = "cartpole", e_agent = "heuristic", e_tree, e_trace, e_dump;
  std::size_t e_episodes = 100;
  std::uint64_t e_seed = 0;
  bool e_greedy = false;
  eval->add_option("--model", e_model, "model or checkpoint JSON");
  eval->add_option("--domain", e_domain)->capture_default_str();
  eval->add_option("--agent", e_agent, "agent to build when --model is absent")->capture_default_str();
  eval->add_option("--tree", e_tree, "tree source file");
  eval->add_option("--episodes", e_episodes)->capture_default_str();
  eval->add_option("--seed", e_seed)->capture_default_str();
  eval->add_flag("--greedy", e_greedy, "take the most probable action");
  eval->add_option("--render-trace", e_trace, "write per-step positions as CSV");
  eval->add_option("--dump-trajectories", e_dump, "write transitions as JSON lines");

  auto* ablate = app.add_subcommand("ablate", "average reward per mistake rate");
  RunFlags a_flags;
  a_flags.episodes = 0;
  std::vector<double> a_rates{0.0, 0.05, 0.1, 0.15, 0.2};
  std::string a_out;
  a_flags.add(*ablate);
  ablate->add_option("--rates", a_rates, "comma-separated mistake rates")->delimiter(',')->capture_default_str();
  ablate->add_option("--out", a_out, "write the table as CSV");

  auto* diverge = app.add_subcommand("diverge", "divergence of checkpoints from an initial model");
  std::string d_init, d_dir, d_out;
  diverge->add_option("--init", d_init, "initial prolonet-v1 model")->required();
  diverge->add_option("--checkpoints", d_dir, "checkpoint directory")->required();
  diverge->add_option("--out", d_out, "write CSV here");

  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::string s_host, s_out;
  int s_port = 8080;
  std::size_t s_jobs = 1;
  serve->add_option("--host", s_host, "bind address (or PROLONET_BIND=host:port)");
  serve->add_option("--port", s_port)->capture_default_str();
  serve->add_option("--out", s_out, "root directory for job outputs");
  serve->add_option("--jobs", s_jobs, "concurrent training jobs")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*compile) return cmd_compile(c_tree, c_domain, c_out, c_print);
    if (*train) return cmd_train(t_flags, t_out);
    if (*eval) return cmd_eval(e_model, e_domain, e_agent, e_tree, e_episodes, e_seed, e_greedy, e_trace, e_dump);
    if (*ablate) return cmd_ablate(a_flags, a_rates, a_out);
    if (*diverge) return cmd_diverge(d_init, d_dir, d_out);
    if (*serve) return cmd_serve(s_host, s_port, s_out, s_jobs);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
