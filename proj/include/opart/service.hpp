#pragma once

#include <condition_variable>
#include <functional>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "opart/config.hpp"
#include "opart/error.hpp"
#include "opart/fairness.hpp"
#include "opart/ingest.hpp"
#include "opart/pipeline.hpp"

namespace opart {

/// Request-level failure carrying an HTTP-style status and a stable code.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message)
      : Error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  nlohmann::ordered_json to_json() const;

 private:
  int status_;
  std::string code_;
};

/// Curator sessions over one shared, read-only dataset. Transport-free: every
/// endpoint takes and returns JSON. Each session runs at most one solve at a
/// time on its own worker thread; reads never wait for a running solve.
class SessionManager {
 public:
  SessionManager(std::shared_ptr<const Dataset> dataset, Defaults defaults,
                 std::optional<std::filesystem::path> snapshot = std::nullopt);
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  using Json = nlohmann::ordered_json;

  /// Body (all optional): beta, lambda_bar, tau_bar, step_mode, max_iters, r,
  /// init, seed, groups: [{dimension, disadvantaged: [...]}].
  Json create_session(const Json& body);
  Json get_session(const std::string& session) const;
  Json update_hyperparams(const std::string& session, const Json& body);
  /// Body: {locks: [{location, object, weight}]}; replaces the lock set.
  Json set_locks(const std::string& session, const Json& body);
  Json solve_async(const std::string& session);
  /// Status of `job`, or of the session's latest job when empty.
  Json get_report(const std::string& session, const std::string& job = {}) const;
  Json get_fairness(const std::string& session) const;
  /// Latest solved assignment, or the baseline before any solve.
  Json get_assignment(const std::string& session) const;

  /// Blocks until the job finishes; for tests and orderly shutdown.
  void wait(const std::string& session, const std::string& job = {}) const;

  const Dataset& dataset() const noexcept { return *dataset_; }
  const Matrix& baseline() const noexcept { return baseline_; }

 private:
  struct Job;
  struct Session;

  std::shared_ptr<Session> find(const std::string& session) const;
  std::shared_ptr<const Problem> problem_for(double beta);
  void run_job(std::shared_ptr<Session> session, std::shared_ptr<Job> job, RunConfig config);
  Json fairness_json(const Matrix& P, const std::vector<GroupSpec>& groups) const;
  Json session_json(const Session& s) const;
  void save_snapshot() const;
  void load_snapshot();

  std::shared_ptr<const Dataset> dataset_;
  Defaults defaults_;
  std::optional<std::filesystem::path> snapshot_;
  Matrix baseline_;
  std::string baseline_label_;
  std::vector<OccupancyAssignment> rounds_;

  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_session_ = 1;
  std::map<double, std::shared_ptr<const Problem>> problems_;
  std::vector<std::jthread> workers_;
};

/// Serves the SessionManager endpoints over HTTP until `stop` is signalled
/// (or forever when unset). Returns false if the port could not be bound.
struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
};
bool serve(SessionManager& manager, const ServeOptions& options,
           std::function<void(int bound_port)> on_ready = {},
           std::stop_token stop = {});

}  // namespace opart
