#include "prolonet/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "prolonet/model_io.hpp"

namespace prolonet {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  trainer.validate();
  if (seeds.empty()) throw InvalidInput("at least one seed is required");
  if (!(mistake_rate >= 0.0 && mistake_rate <= 0.5)) throw InvalidInput("mistake_rate must be in [0, 0.5]");
  if (running_window == 0) throw InvalidInput("running_window must be positive");
}

nlohmann::json to_json(const RunConfig& cfg) {
  nlohmann::json doc{{"domain", to_string(cfg.domain)},
                     {"agent", to_string(cfg.agent)},
                     {"trainer", to_json(cfg.trainer)},
                     {"seeds", cfg.seeds},
                     {"episodes", cfg.episodes},
                     {"mistake_rate", cfg.mistake_rate},
                     {"eval_episodes", cfg.eval_episodes},
                     {"running_window", cfg.running_window},
                     {"greedy_eval", cfg.greedy_eval},
                     {"stop_when_solved", cfg.stop_when_solved}};
  if (cfg.tree_source) doc["tree_source"] = *cfg.tree_source;
  if (cfg.tree) doc["tree"] = *cfg.tree;
  return doc;
}

RunConfig run_config_from_json(const nlohmann::json& doc, const RunConfig& base) {
  if (!doc.is_object()) throw InvalidInput("run config must be a JSON object");
  RunConfig cfg = base;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "domain") cfg.domain = parse_domain(value.get<std::string>());
      else if (key == "agent") cfg.agent = parse_agent_kind(value.get<std::string>());
      else if (key == "tree_source") {
        cfg.tree_source = value.get<std::string>();
        cfg.tree.reset();
      } else if (key == "tree") {
        cfg.tree = value;
        cfg.tree_source.reset();
      } else if (key == "trainer") {
        nlohmann::json merged = to_json(cfg.trainer);
        merged.update(value);
        cfg.trainer = trainer_config_from_json(merged);
      } else if (key == "seeds") {
        if (!value.is_array()) throw InvalidInput("seeds must be an array");
        cfg.seeds.clear();
        for (const auto& s : value) cfg.seeds.push_back(json_count(s, "seed"));
      }
      else if (key == "episodes") cfg.episodes = json_count(value, key);
      else if (key == "mistake_rate") cfg.mistake_rate = value.get<double>();
      else if (key == "eval_episodes") cfg.eval_episodes = json_count(value, key);
      else if (key == "running_window") cfg.running_window = json_count(value, key);
      else if (key == "greedy_eval") cfg.greedy_eval = value.get<bool>();
      else if (key == "stop_when_solved") cfg.stop_when_solved = value.get<bool>();
      else throw InvalidInput("unknown run setting '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("bad run setting: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

TreeSpec resolve_tree(const RunConfig& cfg) {
  if (cfg.tree_source) return parse_domain_tree(cfg.domain, *cfg.tree_source);
  if (cfg.tree) {
    const auto& info = domain_info(cfg.domain);
    std::vector<TreeSpecIssue> issues;
    auto tree = treespec_from_json(*cfg.tree, info.feature_names, info.action_names, info.checks, issues);
    if (!issues.empty()) {
      throw InvalidInput("invalid tree at " + issues.front().path + ": " + issues.front().message);
    }
    return tree;
  }
  return default_tree(cfg.domain);
}

Agent make_run_agent(const RunConfig& cfg, std::uint64_t seed) {
  AgentOptions opts;
  opts.growth = cfg.trainer.growth;
  opts.growth_config = cfg.trainer.growth_config;
  opts.mistake_rate = cfg.mistake_rate;
  opts.mistake_seed = seed;
  return build_agent(cfg.agent, cfg.domain, resolve_tree(cfg), seed, opts);
}

double SeedResult::mean_training_reward() const {
  if (metrics.empty()) return 0.0;
  double total = 0.0;
  for (const auto& m : metrics) total += m.reward;
  return total / static_cast<double>(metrics.size());
}

std::vector<double> running_mean(std::span<const double> values, std::size_t window) {
  std::vector<double> out;
  if (window == 0 || values.size() < window) return out;
  double sum = std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(window), 0.0);
  out.push_back(sum / static_cast<double>(window));
  for (std::size_t i = window; i < values.size(); ++i) {
    sum += values[i] - values[i - window];
    out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

namespace {

nlohmann::json eval_json(const EvalResult& e) {
  return {{"mean", e.mean},
          {"stddev", e.stddev},
          {"mean_length", e.mean_length},
          {"mean_fire_distance", e.mean_fire_distance},
          {"episodes", e.rewards.size()}};
}

nlohmann::json divergence_json(const DivergenceRecord& d) {
  return {{"checkpoint", d.checkpoint},
          {"mse_weights", d.mse_weights},
          {"mse_comparators", d.mse_comparators},
          {"mse_leaves", d.mse_leaves}};
}

std::string fraction_label(double f) {
  std::ostringstream out;
  out << f;
  return out.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_metric_row(std::ostream& out, const EpisodeMetrics& m) {
  out << m.episode << ',' << m.reward << ',' << m.length << ',' << m.loss << ',' << m.growth_events.size() << ','
      << m.mean_fire_distance << ',' << to_string(m.mode) << ',' << (m.rolled_back ? 1 : 0) << ','
      << (m.aborted ? 1 : 0) << '\n';
}

constexpr const char* kMetricHeader =
    "episode,reward,length,loss,growth_events,mean_fire_distance,mode,rolled_back,aborted\n";

nlohmann::json checkpoint_json(const Agent& agent, const Trainer& trainer, std::size_t episode,
                               const std::string& label) {
  nlohmann::json doc{{"format", "prolonet-checkpoint-v1"},
                     {"checkpoint", label},
                     {"episode", episode},
                     {"agent", to_string(agent.kind)},
                     {"model", actor_to_json(agent)},
                     {"optimizer", trainer.optimizer_state()}};
  if (agent.prolonet) doc["deep"] = to_json(agent.prolonet->deep());
  if (agent.critic) std::visit([&](const auto& net) { doc["critic"] = to_json(net); }, *agent.critic);
  return doc;
}

}  // namespace

nlohmann::json to_json(const SeedResult& r) {
  nlohmann::json div = nlohmann::json::array();
  for (const auto& d : r.divergence) div.push_back(divergence_json(d));
  nlohmann::json doc{{"seed", r.seed},
                     {"episodes", r.metrics.size()},
                     {"initial", eval_json(r.initial)},
                     {"final", eval_json(r.final)},
                     {"mean_training_reward", r.mean_training_reward()},
                     {"best_running_mean", r.best_running_mean},
                     {"divergence", std::move(div)}};
  doc["solved_episode"] = r.solved_episode ? nlohmann::json(*r.solved_episode) : nlohmann::json(nullptr);
  if (r.final_agent && r.final_agent->prolonet) {
    doc["final_nodes"] = r.final_agent->prolonet->shallow().nodes.size();
    doc["final_leaves"] = r.final_agent->prolonet->shallow().leaves.size();
  }
  return doc;
}

SeedResult run_seed(const RunConfig& cfg, std::uint64_t seed, const std::optional<fs::path>& seed_dir,
                    const SeedMetricCallback& on_metric) {
  cfg.validate();
  const auto env = make_env(cfg.domain);
  const auto& info = domain_info(cfg.domain);
  Agent agent = make_run_agent(cfg, seed);
  const std::uint64_t eval_seed = mix_seed(seed, 0xE7A1u);

  SeedResult res;
  res.seed = seed;
  res.initial_agent = agent;
  res.initial = evaluate(agent, *env, cfg.eval_episodes, eval_seed, cfg.greedy_eval);

  std::optional<ProLoNet> init_net;
  if (agent.prolonet) init_net = agent.prolonet->shallow();

  std::ofstream csv, jsonl, growth;
  if (seed_dir) {
    fs::create_directories(*seed_dir / "checkpoints");
    write_json_file(*seed_dir / "init.json", actor_to_json(agent));
    csv = open_out(*seed_dir / "metrics.csv");
    csv << kMetricHeader;
    jsonl = open_out(*seed_dir / "metrics.jsonl");
    growth = open_out(*seed_dir / "growth.jsonl");
  }

  // Episode counts at which the 25/50/75/100% checkpoints fall.
  std::vector<std::pair<std::size_t, double>> marks;
  if (cfg.episodes > 0) {
    for (double f : {0.25, 0.5, 0.75, 1.0}) {
      const auto at = static_cast<std::size_t>(std::ceil(f * static_cast<double>(cfg.episodes)));
      marks.emplace_back(std::max<std::size_t>(at, 1), f);
    }
  }

  auto checkpoint = [&](const Trainer& trainer, std::size_t episode, const std::string& label) {
    if (init_net) res.divergence.push_back(divergence(*init_net, agent.prolonet->shallow()));
    if (init_net) res.divergence.back().checkpoint = label;
    if (seed_dir) {
      write_json_file(*seed_dir / "checkpoints" / ("ckpt_" + label + ".json"),
                      checkpoint_json(agent, trainer, episode, label));
    }
  };

  Trainer trainer(agent, *env, cfg.trainer, seed);
  std::vector<double> rewards;
  double window_sum = 0.0;
  for (std::size_t e = 0; e < cfg.episodes; ++e) {
    EpisodeMetrics m = trainer.run_episode();
    rewards.push_back(m.reward);
    window_sum += m.reward;
    if (rewards.size() > cfg.running_window) window_sum -= rewards[rewards.size() - 1 - cfg.running_window];
    if (rewards.size() >= cfg.running_window) {
      const double rm = window_sum / static_cast<double>(cfg.running_window);
      res.best_running_mean = std::max(res.best_running_mean, rm);
      if (!res.solved_episode && info.solved_reward && rm >= *info.solved_reward) {
        res.solved_episode = e + 1;
        checkpoint(trainer, e + 1, "solved");
      }
    }
    if (seed_dir) {
      write_metric_row(csv, m);
      jsonl << to_json(m).dump() << '\n';
      for (const auto& g : m.growth_events) growth << to_json(g, m.episode).dump() << '\n';
    }
    for (const auto& [at, f] : marks) {
      if (at == e + 1) checkpoint(trainer, e + 1, fraction_label(f));
    }
    if (on_metric) on_metric(seed, m);
    res.metrics.push_back(std::move(m));
    if (cfg.stop_when_solved && res.solved_episode) break;
  }

  res.final = evaluate(agent, *env, cfg.eval_episodes, eval_seed, cfg.greedy_eval);
  if (seed_dir) {
    if (init_net) write_divergence_csv(*seed_dir / "divergence.csv", res.divergence);
    write_json_file(*seed_dir / "final.json", actor_to_json(agent));
    write_json_file(*seed_dir / "result.json", to_json(res));
  }
  res.final_agent = std::move(agent);
  return res;
}

namespace {

template <class Fn>
void parallel_for(std::size_t n, std::size_t parallel, Fn&& fn) {
  if (parallel == 0) parallel = std::max(1u, std::thread::hardware_concurrency());
  parallel = std::min(parallel, n);
  if (parallel <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < parallel; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

nlohmann::json summary_json(const RunConfig& cfg, const RunResult& r) {
  nlohmann::json seeds = nlohmann::json::array();
  double initial = 0.0, final = 0.0;
  for (const auto& s : r.seeds) {
    seeds.push_back(to_json(s));
    initial += s.initial.mean;
    final += s.final.mean;
  }
  const double n = static_cast<double>(std::max<std::size_t>(r.seeds.size(), 1));
  nlohmann::json doc{{"domain", to_string(cfg.domain)},
                     {"agent", to_string(cfg.agent)},
                     {"episodes", cfg.episodes},
                     {"mean_initial_reward", initial / n},
                     {"mean_final_reward", final / n},
                     {"best_mean_running", r.best_mean_running},
                     {"seeds", std::move(seeds)}};
  doc["mean_solved_episode"] =
      r.mean_solved_episode ? nlohmann::json(*r.mean_solved_episode) : nlohmann::json(nullptr);
  return doc;
}

RunResult run_training(const RunConfig& cfg, const std::optional<fs::path>& out_dir,
                       const SeedMetricCallback& on_metric, std::size_t parallel) {
  cfg.validate();
  resolve_tree(cfg);  // fail before any thread starts
  if (out_dir) {
    fs::create_directories(*out_dir);
    write_json_file(*out_dir / "config.json", to_json(cfg));
  }
  RunResult res;
  res.seeds.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), parallel, [&](std::size_t i) {
    const auto seed = cfg.seeds[i];
    std::optional<fs::path> dir;
    if (out_dir) dir = *out_dir / ("seed_" + std::to_string(seed));
    res.seeds[i] = run_seed(cfg, seed, dir, on_metric);
  });

  // Seeds stopped early only count toward the episodes they ran.
  std::size_t longest = 0;
  for (const auto& s : res.seeds) longest = std::max(longest, s.metrics.size());
  res.mean_curve.assign(longest, 0.0);
  std::vector<std::size_t> counts(longest, 0);
  for (const auto& s : res.seeds) {
    for (std::size_t e = 0; e < s.metrics.size(); ++e) {
      res.mean_curve[e] += s.metrics[e].reward;
      ++counts[e];
    }
  }
  for (std::size_t e = 0; e < longest; ++e) res.mean_curve[e] /= static_cast<double>(counts[e]);
  const auto rm = running_mean(res.mean_curve, cfg.running_window);
  const auto& info = domain_info(cfg.domain);
  for (std::size_t i = 0; i < rm.size(); ++i) {
    res.best_mean_running = std::max(res.best_mean_running, rm[i]);
    if (!res.mean_solved_episode && info.solved_reward && rm[i] >= *info.solved_reward) {
      res.mean_solved_episode = i + cfg.running_window;
    }
  }

  if (out_dir) {
    auto csv = open_out(*out_dir / "metrics.csv");
    csv << "seed," << kMetricHeader;
    for (const auto& s : res.seeds) {
      for (const auto& m : s.metrics) {
        csv << s.seed << ',';
        write_metric_row(csv, m);
      }
    }
    write_json_file(*out_dir / "summary.json", summary_json(cfg, res));
  }
  return res;
}

std::vector<AblationRow> run_ablation(const RunConfig& cfg, std::span<const double> mistake_rates,
                                      std::size_t parallel) {
  std::vector<AblationRow> rows;
  for (double rate : mistake_rates) {
    RunConfig c = cfg;
    c.mistake_rate = rate;
    c.validate();
    AblationRow row;
    row.mistake_rate = rate;
    std::vector<SeedResult> results(c.seeds.size());
    parallel_for(c.seeds.size(), parallel, [&](std::size_t i) { results[i] = run_seed(c, c.seeds[i]); });
    for (const auto& r : results) {
      row.initial_rewards.push_back(r.initial.mean);
      if (c.episodes > 0) row.training_rewards.push_back(r.mean_training_reward());
    }
    auto stats = [](const std::vector<double>& v, double& mean, double& sd) {
      if (v.empty()) return;
      mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
      double var = 0.0;
      for (double x : v) var += (x - mean) * (x - mean);
      sd = std::sqrt(var / static_cast<double>(v.size()));
    };
    stats(row.initial_rewards, row.mean_initial, row.stddev_initial);
    stats(row.training_rewards, row.mean_training, row.stddev_training);
    rows.push_back(std::move(row));
  }
  return rows;
}

Agent load_agent_file(const fs::path& path, Domain domain) {
  const auto doc = read_json_file(path);
  if (doc.is_object() && doc.contains("model")) return agent_from_json(doc["model"], domain);
  return agent_from_json(doc, domain);
}

std::vector<DivergenceRecord> divergence_from_dir(const ProLoNet& init, const fs::path& checkpoint_dir) {
  if (!fs::is_directory(checkpoint_dir)) throw InvalidInput("not a directory: " + checkpoint_dir.string());
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(checkpoint_dir)) {
    if (entry.path().extension() != ".json") continue;
    files.emplace_back(entry.path().stem().string(), entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<DivergenceRecord> out;
  for (const auto& [stem, path] : files) {
    auto doc = read_json_file(path);
    std::string label = stem;
    if (doc.is_object() && doc.contains("model")) {
      label = doc.value("checkpoint", stem);
      doc = doc["model"];
    }
    auto rec = divergence(init, prolonet_from_json(doc));
    rec.checkpoint = label;
    out.push_back(std::move(rec));
  }
  return out;
}

void write_divergence_csv(const fs::path& path, std::span<const DivergenceRecord> records) {
  auto out = open_out(path);
  out << "checkpoint,mse_weights,mse_comparators,mse_leaves\n";
  for (const auto& r : records) {
    out << r.checkpoint << ',' << r.mse_weights << ',' << r.mse_comparators << ',' << r.mse_leaves << '\n';
  }
}

}  // namespace prolonet
