#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

namespace prolonet {

struct ServiceOptions {
  std::size_t max_concurrent_jobs = 1;
  /// Jobs write their run directory under this root when set.
  std::optional<std::filesystem::path> out_root;
  /// Seeds trained at once inside one job.
  std::size_t seed_parallelism = 0;
};

/// JSON-over-HTTP front end.
///
///   GET  /api/domains
///   POST /api/compile                 {"domain", "tree" | "source"}
///   POST /api/train                   run config with an inline tree
///   GET  /api/jobs/{id}
///   GET  /api/jobs/{id}/metrics       ?since=N&wait_ms=M (long poll)
///   POST /api/jobs/{id}/evaluate      {"episodes", "seed"}
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds and serves until stop(). Returns false if the bind failed.
  bool listen(const std::string& host, int port);
  /// Binds to a free port and returns it; serve with listen_after_bind().
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();
  /// Blocks until every queued and running job has finished.
  void wait_idle();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

/// POST /api/compile without the transport: 200 with the compiled summary or
/// 400 with {"errors": [{"path", "message"}]}.
ApiResponse compile_request(const nlohmann::json& body);

}  // namespace prolonet
