#include "prolonet/service.hpp"

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>

#include "prolonet/compile.hpp"
#include "prolonet/domain.hpp"
#include "prolonet/model_io.hpp"
#include "prolonet/runner.hpp"

namespace prolonet {

namespace {

nlohmann::json error_list(const std::string& path, const std::string& message) {
  return {{"errors", nlohmann::json::array({{{"path", path}, {"message", message}}})}};
}

/// Validates the tree part of a request against the domain vocabulary.
/// Exactly one of "tree" (treespec-v1) or "source" / "tree_source" (text).
std::optional<TreeSpec> request_tree(const nlohmann::json& body, Domain domain, std::vector<TreeSpecIssue>& issues) {
  const auto& info = domain_info(domain);
  std::optional<std::string> source_key;
  if (body.contains("source")) source_key = "source";
  if (body.contains("tree_source")) source_key = "tree_source";
  if (source_key) {
    const auto& src = body[*source_key];
    if (!src.is_string()) {
      issues.push_back({"/" + *source_key, "expected a string"});
      return std::nullopt;
    }
    try {
      return parse_tree(src.get<std::string>(), info.feature_names, info.action_names);
    } catch (const ParseError& e) {
      issues.push_back({"/" + *source_key, e.what()});
      return std::nullopt;
    }
  }
  if (!body.contains("tree")) return std::nullopt;
  auto tree = treespec_from_json(body["tree"], info.feature_names, info.action_names, info.checks, issues);
  for (auto& issue : issues) issue.path = "/tree" + issue.path;
  if (!issues.empty()) return std::nullopt;
  if (tree.feature_names != info.feature_names) {
    issues.push_back({"/tree/features", "features do not match domain " + info.name});
  }
  if (tree.action_names != info.action_names) {
    issues.push_back({"/tree/actions", "actions do not match domain " + info.name});
  }
  if (!issues.empty()) return std::nullopt;
  return tree;
}

nlohmann::json issues_json(const std::vector<TreeSpecIssue>& issues) {
  nlohmann::json errors = nlohmann::json::array();
  for (const auto& i : issues) errors.push_back({{"path", i.path}, {"message", i.message}});
  return {{"errors", std::move(errors)}};
}

std::optional<Domain> request_domain(const nlohmann::json& body, ApiResponse& err) {
  if (!body.is_object()) {
    err = {400, error_list("", "request body must be a JSON object")};
    return std::nullopt;
  }
  if (!body.contains("domain") || !body["domain"].is_string()) {
    err = {400, error_list("/domain", "missing domain (cartpole or wildfire)")};
    return std::nullopt;
  }
  try {
    return parse_domain(body["domain"].get<std::string>());
  } catch (const InvalidInput& e) {
    err = {400, error_list("/domain", e.what())};
    return std::nullopt;
  }
}

}  // namespace

ApiResponse compile_request(const nlohmann::json& body) {
  ApiResponse resp;
  const auto domain = request_domain(body, resp);
  if (!domain) return resp;
  const auto& info = domain_info(*domain);
  std::vector<TreeSpecIssue> issues;
  auto tree = request_tree(body, *domain, issues);
  if (!issues.empty()) return {400, issues_json(issues)};
  if (!tree) return {400, error_list("/tree", "missing tree or source")};
  try {
    const auto net = compile_tree(*tree, info.feature_names.size(), info.action_names.size());
    return {200,
            {{"nodes", net.nodes.size()},
             {"leaves", net.leaves.size()},
             {"summary", structure_summary(net)},
             {"source", format_tree(*tree)},
             {"tree", to_json(*tree)},
             {"model", to_json(net)}}};
  } catch (const InvalidInput& e) {
    return {400, error_list("/tree", e.what())};
  }
}

// ---------------------------------------------------------------------------

enum class JobState { Queued, Running, Done, Failed };

std::string to_string(JobState s) {
  switch (s) {
    case JobState::Queued: return "queued";
    case JobState::Running: return "running";
    case JobState::Done: return "done";
    case JobState::Failed: return "failed";
  }
  return "unknown";
}

struct Job {
  std::string id;
  JobState state = JobState::Queued;
  RunConfig config;
  std::vector<nlohmann::json> points;
  nlohmann::json summary;
  std::string error;
  std::vector<std::pair<std::uint64_t, Agent>> agents;  // final agent per seed
};

struct Service::Impl {
  ServiceOptions options;
  httplib::Server server;
  std::mutex mu;
  std::condition_variable changed;
  std::map<std::string, std::shared_ptr<Job>> jobs;
  std::deque<std::shared_ptr<Job>> queue;
  std::size_t running = 0;
  std::size_t next_id = 1;
  bool stopping = false;
  std::vector<std::thread> workers;

  explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
    routes();
    const std::size_t n = std::max<std::size_t>(options.max_concurrent_jobs, 1);
    for (std::size_t i = 0; i < n; ++i) workers.emplace_back([this] { work(); });
  }

  ~Impl() {
    {
      std::lock_guard lock(mu);
      stopping = true;
    }
    changed.notify_all();
    server.stop();
    for (auto& w : workers) w.join();
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static std::optional<nlohmann::json> parse_body(const httplib::Request& req, httplib::Response& res) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      reply(res, 400, error_list("", std::string("invalid JSON: ") + e.what()));
      return std::nullopt;
    }
  }

  std::shared_ptr<Job> find(const std::string& id) {
    std::lock_guard lock(mu);
    auto it = jobs.find(id);
    return it == jobs.end() ? nullptr : it->second;
  }

  nlohmann::json job_json(const Job& job) {
    nlohmann::json doc{{"id", job.id},
                       {"state", to_string(job.state)},
                       {"config", to_json(job.config)},
                       {"points", job.points.size()}};
    if (!job.summary.is_null()) doc["summary"] = job.summary;
    if (!job.error.empty()) doc["error"] = job.error;
    return doc;
  }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Headers", "Content-Type"},
                                {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
    server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    server.Get("/api/domains", [](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, {{"domains", {vocabulary_json(Domain::CartPole), vocabulary_json(Domain::Wildfire)}}});
    });

    server.Post("/api/compile", [](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req, res);
      if (!body) return;
      const auto out = compile_request(*body);
      reply(res, out.status, out.body);
    });

    server.Post("/api/train", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req, res);
      if (!body) return;
      submit(*body, res);
    });

    server.Get(R"(/api/jobs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      auto job = find(req.matches[1]);
      if (!job) return reply(res, 404, error_list("", "unknown job"));
      std::lock_guard lock(mu);
      reply(res, 200, job_json(*job));
    });

    server.Get(R"(/api/jobs/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
      auto job = find(req.matches[1]);
      if (!job) return reply(res, 404, error_list("", "unknown job"));
      std::size_t since = 0;
      long wait_ms = 0;
      try {
        if (req.has_param("since")) since = std::stoul(req.get_param_value("since"));
        if (req.has_param("wait_ms")) wait_ms = std::stol(req.get_param_value("wait_ms"));
      } catch (const std::exception&) {
        return reply(res, 400, error_list("", "since and wait_ms must be integers"));
      }
      wait_ms = std::clamp(wait_ms, 0L, 30000L);
      std::unique_lock lock(mu);
      changed.wait_for(lock, std::chrono::milliseconds(wait_ms), [&] {
        return stopping || job->points.size() > since || job->state == JobState::Done ||
               job->state == JobState::Failed;
      });
      nlohmann::json points = nlohmann::json::array();
      for (std::size_t i = since; i < job->points.size(); ++i) points.push_back(job->points[i]);
      reply(res, 200, {{"state", to_string(job->state)}, {"next", job->points.size()}, {"points", std::move(points)}});
    });

    server.Post(R"(/api/jobs/([^/]+)/evaluate)", [this](const httplib::Request& req, httplib::Response& res) {
      auto job = find(req.matches[1]);
      if (!job) return reply(res, 404, error_list("", "unknown job"));
      const auto body = parse_body(req, res);
      if (!body) return;
      {
        std::lock_guard lock(mu);
        if (job->state != JobState::Done) {
          return reply(res, 409, error_list("", "job is " + to_string(job->state)));
        }
      }
      evaluate_job(*job, *body, res);
    });
  }

  void submit(const nlohmann::json& body, httplib::Response& res) {
    ApiResponse err;
    const auto domain = request_domain(body, err);
    if (!domain) return reply(res, err.status, err.body);
    std::vector<TreeSpecIssue> issues;
    auto tree = request_tree(body, *domain, issues);
    if (!issues.empty()) return reply(res, 400, issues_json(issues));

    nlohmann::json cfg_doc = body;
    cfg_doc.erase("source");
    cfg_doc.erase("tree_source");
    cfg_doc.erase("tree");
    RunConfig cfg;
    try {
      cfg = run_config_from_json(cfg_doc);
    } catch (const InvalidInput& e) {
      return reply(res, 400, error_list("", e.what()));
    }
    if (tree) cfg.tree = to_json(*tree);

    auto job = std::make_shared<Job>();
    job->config = cfg;
    {
      std::lock_guard lock(mu);
      job->id = "job-" + std::to_string(next_id++);
      jobs[job->id] = job;
      queue.push_back(job);
    }
    changed.notify_all();
    reply(res, 202, {{"id", job->id}, {"state", "queued"}});
  }

  void work() {
    for (;;) {
      std::shared_ptr<Job> job;
      {
        std::unique_lock lock(mu);
        changed.wait(lock, [&] { return stopping || !queue.empty(); });
        if (stopping) return;
        job = queue.front();
        queue.pop_front();
        job->state = JobState::Running;
        ++running;
      }
      changed.notify_all();
      run(*job);
      {
        std::lock_guard lock(mu);
        --running;
      }
      changed.notify_all();
    }
  }

  void run(Job& job) {
    std::optional<std::filesystem::path> dir;
    if (options.out_root) dir = *options.out_root / job.id;
    try {
      auto on_metric = [&](std::uint64_t seed, const EpisodeMetrics& m) {
        {
          std::lock_guard lock(mu);
          auto point = to_json(m);
          point["index"] = job.points.size();
          point["seed"] = seed;
          point["growth_events"] = m.growth_events.size();
          job.points.push_back(std::move(point));
        }
        changed.notify_all();
      };
      auto result = run_training(job.config, dir, on_metric, options.seed_parallelism);
      std::lock_guard lock(mu);
      job.summary = summary_json(job.config, result);
      for (auto& s : result.seeds) job.agents.emplace_back(s.seed, std::move(*s.final_agent));
      job.state = JobState::Done;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu);
      job.error = e.what();
      job.state = JobState::Failed;
    }
  }

  void evaluate_job(const Job& job, const nlohmann::json& body, httplib::Response& res) {
    std::size_t episodes = 10;
    std::uint64_t seed = 0;
    bool greedy = false;
    try {
      if (body.contains("episodes")) episodes = json_count(body["episodes"], "episodes");
      if (body.contains("seed")) seed = json_count(body["seed"], "seed");
      if (body.contains("greedy")) greedy = body["greedy"].get<bool>();
    } catch (const std::exception& e) {
      return reply(res, 400, error_list("", e.what()));
    }
    if (episodes == 0) return reply(res, 400, error_list("/episodes", "episodes must be positive"));
    const auto env = make_env(job.config.domain);
    nlohmann::json per_seed = nlohmann::json::array();
    double reward = 0.0, distance = 0.0, length = 0.0;
    for (const auto& [s, agent] : job.agents) {
      const auto e = evaluate(agent, *env, episodes, mix_seed(seed, s), greedy);
      per_seed.push_back({{"seed", s},
                          {"mean_reward", e.mean},
                          {"stddev", e.stddev},
                          {"mean_length", e.mean_length},
                          {"mean_fire_distance", e.mean_fire_distance}});
      reward += e.mean;
      distance += e.mean_fire_distance;
      length += e.mean_length;
    }
    const double n = static_cast<double>(std::max<std::size_t>(job.agents.size(), 1));
    nlohmann::json out{{"episodes", episodes},
                       {"mean_reward", reward / n},
                       {"mean_length", length / n},
                       {"per_seed", std::move(per_seed)}};
    if (job.config.domain == Domain::Wildfire) out["mean_fire_distance"] = distance / n;
    reply(res, 200, out);
  }
};

Service::Service(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Service::~Service() = default;

bool Service::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }
int Service::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }
bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }

void Service::wait_idle() {
  std::unique_lock lock(impl_->mu);
  impl_->changed.wait(lock, [&] { return impl_->queue.empty() && impl_->running == 0; });
}

}  // namespace prolonet
