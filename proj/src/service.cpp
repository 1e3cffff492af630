#include "opart/service.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <httplib.h>

#include "opart/io_format.hpp"

namespace opart {

using Json = nlohmann::ordered_json;

Json ServiceError::to_json() const {
  return Json{{"error", {{"status", status_}, {"code", code_}, {"message", what()}}}};
}

namespace {

ServiceError bad_request(const std::string& message) {
  return ServiceError(400, "bad_request", message);
}

template <typename T>
T field(const Json& body, const char* key, T fallback) {
  const auto it = body.find(key);
  if (it == body.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const Json::exception&) {
    throw bad_request(std::string("field '") + key + "' has the wrong type");
  }
}

Json matrix_json(const Matrix& P) {
  auto rows = Json::array();
  for (Eigen::Index n = 0; n < P.rows(); ++n) {
    auto row = Json::array();
    for (Eigen::Index m = 0; m < P.cols(); ++m) row.push_back(P(n, m));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& rows) {
  const auto N = static_cast<Eigen::Index>(rows.size());
  const auto M = N ? static_cast<Eigen::Index>(rows.at(0).size()) : 0;
  Matrix P(N, M);
  for (Eigen::Index n = 0; n < N; ++n) {
    const auto& row = rows.at(static_cast<std::size_t>(n));
    if (static_cast<Eigen::Index>(row.size()) != M) throw Error("ragged matrix in snapshot");
    for (Eigen::Index m = 0; m < M; ++m) P(n, m) = row.at(static_cast<std::size_t>(m)).get<double>();
  }
  return P;
}

Json hyper_json(const RunConfig& c) {
  return Json{{"alpha", c.hyper.alpha},
              {"beta", c.hyper.beta},
              {"lambda_bar", c.hyper.lambda_bar},
              {"tau_bar", c.hyper.tau_bar},
              {"step_mode", to_string(c.hyper.step_mode)},
              {"step", c.hyper.step},
              {"max_iters", c.hyper.max_iters},
              {"r", c.hyper.scaling_samples},
              {"init", to_string(c.init)},
              {"seed", c.seed}};
}

// Applies request fields on top of `config`; rejects invalid values.
void apply_hyper(const Json& body, RunConfig& config) {
  if (!body.is_object()) throw bad_request("request body must be a JSON object");
  static const char* const known[] = {"beta", "lambda_bar", "tau_bar", "step_mode", "step",
                                      "max_iters", "r", "init", "seed", "groups"};
  for (const auto& [key, value] : body.items()) {
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) {
      throw bad_request("unknown field '" + key + "'");
    }
  }
  RunConfig c = config;
  c.hyper.beta = field(body, "beta", c.hyper.beta);
  c.hyper.lambda_bar = field(body, "lambda_bar", c.hyper.lambda_bar);
  c.hyper.tau_bar = field(body, "tau_bar", c.hyper.tau_bar);
  c.hyper.step = field(body, "step", c.hyper.step);
  c.hyper.max_iters = field(body, "max_iters", c.hyper.max_iters);
  c.hyper.scaling_samples = field(body, "r", c.hyper.scaling_samples);
  c.seed = field(body, "seed", c.seed);
  try {
    if (body.contains("step_mode")) c.hyper.step_mode = parse_step_mode(field<std::string>(body, "step_mode", ""));
    if (body.contains("init")) c.init = parse_init_scheme(field<std::string>(body, "init", ""));
  } catch (const ServiceError&) {
    throw;
  } catch (const Error& e) {
    throw bad_request(e.what());
  }
  if (!(c.hyper.beta > 0.0) || !std::isfinite(c.hyper.beta)) throw bad_request("beta must be positive");
  if (!(c.hyper.lambda_bar >= 0.0) || !(c.hyper.tau_bar >= 0.0)) {
    throw bad_request("lambda_bar and tau_bar must be nonnegative");
  }
  if (!(c.hyper.step >= 0.0)) throw bad_request("step must be nonnegative");
  if (c.hyper.max_iters < 1) throw bad_request("max_iters must be at least 1");
  if (c.hyper.scaling_samples < 1) throw bad_request("r must be at least 1");
  config = c;
}

std::vector<GroupSpec> parse_groups(const Json& body, const Dataset& dataset) {
  if (!body.contains("groups")) return default_groups(dataset.schema, dataset.collection());
  const auto& arr = body.at("groups");
  if (!arr.is_array() || arr.empty()) throw bad_request("'groups' must be a nonempty array");
  std::vector<GroupSpec> groups;
  for (const auto& g : arr) {
    GroupSpec spec;
    spec.dimension = field<std::string>(g, "dimension", "");
    for (const auto& c : field<std::vector<std::string>>(g, "disadvantaged", {})) {
      spec.disadvantaged.insert(c);
    }
    spec.label = field<std::string>(g, "label", "");
    spec.complement_label = field<std::string>(g, "complement_label", "");
    try {
      ResolvedGroup(spec, dataset.schema);
    } catch (const Error& e) {
      throw bad_request(e.what());
    }
    groups.push_back(std::move(spec));
  }
  return groups;
}

Json groups_json(const std::vector<GroupSpec>& groups) {
  auto arr = Json::array();
  for (const auto& g : groups) {
    arr.push_back({{"dimension", g.dimension},
                   {"disadvantaged", std::vector<std::string>(g.disadvantaged.begin(), g.disadvantaged.end())},
                   {"label", g.label},
                   {"complement_label", g.complement_label}});
  }
  return arr;
}

}  // namespace

struct SessionManager::Job {
  std::string id;
  std::string status = "queued";
  int iteration = 0;
  double objective = std::numeric_limits<double>::quiet_NaN();
  Json report;
  std::string error;
  std::optional<Matrix> assignment;
  Json fairness;
};

struct SessionManager::Session {
  std::string id;
  RunConfig config;
  std::map<std::pair<std::size_t, std::size_t>, double> locks;
  std::vector<GroupSpec> groups;
  Json baseline_fairness;
  std::vector<std::shared_ptr<Job>> jobs;
  std::shared_ptr<Job> latest_done;
  bool busy = false;
  mutable std::mutex mutex;
  mutable std::condition_variable idle;
};

SessionManager::SessionManager(std::shared_ptr<const Dataset> dataset, Defaults defaults,
                               std::optional<std::filesystem::path> snapshot)
    : dataset_(std::move(dataset)), defaults_(std::move(defaults)), snapshot_(std::move(snapshot)) {
  if (!dataset_) throw Error("session manager needs a dataset");
  const Vector h = dataset_->location_capacities();
  if (dataset_->current) {
    baseline_ = *dataset_->current;
    project_rows(baseline_, h);
    baseline_label_ = "current";
  } else {
    baseline_ = init_uniform(h, dataset_->num_objects()).entries;
    baseline_label_ = "uniform (no current assignment)";
  }
  rounds_ = resample(dataset_->users, dataset_->locations, defaults_.rounds,
                     defaults_.occupancy_seed, defaults_.filling);
  if (snapshot_ && std::filesystem::exists(*snapshot_)) load_snapshot();
}

SessionManager::~SessionManager() {
  std::vector<std::jthread> workers;
  {
    std::lock_guard lock(mutex_);
    workers.swap(workers_);
  }
  workers.clear();  // joins
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& session) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session);
  if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "unknown session '" + session + "'");
  return it->second;
}

std::shared_ptr<const Problem> SessionManager::problem_for(double beta) {
  {
    std::lock_guard lock(mutex_);
    if (const auto it = problems_.find(beta); it != problems_.end()) return it->second;
  }
  CostParams params = defaults_.cost;
  params.beta = beta;
  auto problem = std::make_shared<const Problem>(
      build_problem(*dataset_, params, defaults_.occupancy_seed, defaults_.filling));
  std::lock_guard lock(mutex_);
  return problems_.try_emplace(beta, std::move(problem)).first->second;
}

SessionManager::Json SessionManager::fairness_json(const Matrix& P,
                                                   const std::vector<GroupSpec>& groups) const {
  const auto reports = fairness_table({{"assignment", P}}, rounds_, groups, dataset_->schema,
                                      dataset_->users, dataset_->collection());
  auto arr = Json::array();
  for (const auto& r : reports) {
    arr.push_back({{"group", r.group},
                   {"complement", r.complement},
                   {"disadvantaged", {{"mean", r.disadvantaged.mean}, {"std", r.disadvantaged.stddev}}},
                   {"advantaged", {{"mean", r.advantaged.mean}, {"std", r.advantaged.stddev}}},
                   {"U", r.mean_unfairness}});
  }
  return arr;
}

SessionManager::Json SessionManager::session_json(const Session& s) const {
  auto locks = Json::array();
  for (const auto& [key, weight] : s.locks) {
    locks.push_back({{"location", dataset_->locations[key.first].id},
                     {"object", dataset_->objects[key.second].id},
                     {"weight", weight}});
  }
  Json j{{"session", s.id},
         {"hyperparameters", hyper_json(s.config)},
         {"locks", locks},
         {"groups", groups_json(s.groups)},
         {"solve_in_progress", s.busy}};
  j["latest_job"] = s.jobs.empty() ? Json(nullptr) : Json(s.jobs.back()->id);
  return j;
}

SessionManager::Json SessionManager::create_session(const Json& body) {
  const Json request = body.is_null() ? Json::object() : body;
  auto session = std::make_shared<Session>();
  session->config = defaults_.run_config();
  apply_hyper(request, session->config);
  session->groups = parse_groups(request, *dataset_);
  try {
    session->baseline_fairness = fairness_json(baseline_, session->groups);
  } catch (const Error& e) {
    throw bad_request(e.what());
  }
  Json out;
  {
    std::lock_guard lock(mutex_);
    session->id = "s" + std::to_string(next_session_++);
    sessions_[session->id] = session;
    out = session_json(*session);
  }
  save_snapshot();
  return out;
}

SessionManager::Json SessionManager::get_session(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  return session_json(*s);
}

SessionManager::Json SessionManager::update_hyperparams(const std::string& id, const Json& body) {
  const auto s = find(id);
  if (body.contains("groups")) throw bad_request("groups are fixed when the session is created");
  Json out;
  {
    std::lock_guard lock(s->mutex);
    apply_hyper(body, s->config);
    out = session_json(*s);
  }
  save_snapshot();
  return out;
}

SessionManager::Json SessionManager::set_locks(const std::string& id, const Json& body) {
  const auto s = find(id);
  if (!body.is_object() || !body.contains("locks") || !body.at("locks").is_array()) {
    throw bad_request("body must be {\"locks\": [{location, object, weight}]}");
  }
  const auto location_ids = dataset_->location_ids();
  const auto object_ids = dataset_->object_ids();
  const Vector h = dataset_->location_capacities();
  std::map<std::pair<std::size_t, std::size_t>, double> locks;
  for (const auto& entry : body.at("locks")) {
    const auto loc = field<std::string>(entry, "location", "");
    const auto obj = field<std::string>(entry, "object", "");
    const double weight = field(entry, "weight", 1.0);
    const auto n = std::find(location_ids.begin(), location_ids.end(), loc);
    const auto m = std::find(object_ids.begin(), object_ids.end(), obj);
    if (n == location_ids.end()) throw bad_request("lock references unknown location '" + loc + "'");
    if (m == object_ids.end()) throw bad_request("lock references unknown object '" + obj + "'");
    const auto ni = static_cast<std::size_t>(n - location_ids.begin());
    if (!(weight >= 0.0) || weight > h[static_cast<Eigen::Index>(ni)]) {
      throw bad_request("lock weight for ('" + loc + "', '" + obj +
                        "') must lie in [0, location capacity]");
    }
    locks[{ni, static_cast<std::size_t>(m - object_ids.begin())}] = weight;
  }
  Json out;
  {
    std::lock_guard lock(s->mutex);
    s->locks = std::move(locks);
    out = session_json(*s);
  }
  save_snapshot();
  return out;
}

SessionManager::Json SessionManager::solve_async(const std::string& id) {
  const auto s = find(id);
  auto job = std::make_shared<Job>();
  RunConfig config;
  {
    std::lock_guard lock(s->mutex);
    if (s->busy) throw ServiceError(409, "solve_in_progress", "solve in progress");
    s->busy = true;
    job->id = s->id + "-j" + std::to_string(s->jobs.size() + 1);
    s->jobs.push_back(job);
    config = s->config;
    for (const auto& [key, weight] : s->locks) {
      config.locks.push_back(Lock{key.first, key.second, weight, 0.0});
    }
  }
  {
    std::lock_guard lock(mutex_);
    workers_.emplace_back([this, s, job, config] { run_job(s, job, config); });
  }
  return Json{{"session", id}, {"job", job->id}, {"status", "queued"}};
}

void SessionManager::run_job(std::shared_ptr<Session> s, std::shared_ptr<Job> job, RunConfig config) {
  {
    std::lock_guard lock(s->mutex);
    job->status = "running";
  }
  try {
    const auto problem = problem_for(config.hyper.beta);
    const auto result = run_solve(*problem, config, [&](int iteration, double value) {
      std::lock_guard lock(s->mutex);
      job->iteration = iteration;
      job->objective = value;
    });
    Json report = Json::parse(solve_report_to_json(result));
    Json fairness = fairness_json(result.report.final.entries, s->groups);
    std::lock_guard lock(s->mutex);
    job->report = std::move(report);
    job->fairness = std::move(fairness);
    job->assignment = result.report.final.entries;
    job->status = "done";
    s->latest_done = job;
  } catch (const std::exception& e) {
    std::lock_guard lock(s->mutex);
    job->error = e.what();
    job->status = "failed";
  }
  {
    std::lock_guard lock(s->mutex);
    s->busy = false;
  }
  try {
    save_snapshot();
  } catch (const std::exception&) {
    // A failed snapshot write must not take the worker down; the next
    // mutation retries it.
  }
  s->idle.notify_all();
}

SessionManager::Json SessionManager::get_report(const std::string& id, const std::string& job_id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  std::shared_ptr<Job> job;
  if (job_id.empty()) {
    if (s->jobs.empty()) throw ServiceError(404, "unknown_job", "session '" + id + "' has no solves");
    job = s->jobs.back();
  } else {
    for (const auto& j : s->jobs) {
      if (j->id == job_id) job = j;
    }
    if (!job) throw ServiceError(404, "unknown_job", "unknown job '" + job_id + "'");
  }
  Json out{{"session", id}, {"job", job->id}, {"status", job->status}};
  if (job->status == "running") {
    out["iteration"] = job->iteration;
    out["objective"] = std::isfinite(job->objective) ? Json(job->objective) : Json(nullptr);
  } else if (job->status == "done") {
    out["report"] = job->report;
  } else if (job->status == "failed") {
    out["error"] = job->error;
  }
  return out;
}

SessionManager::Json SessionManager::get_fairness(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  Json out{{"session", id}, {"rounds", rounds_.size()}, {"baseline", s->baseline_fairness}};
  if (s->latest_done) {
    out["job"] = s->latest_done->id;
    out["latest"] = s->latest_done->fairness;
  } else {
    out["job"] = nullptr;
    out["latest"] = nullptr;
  }
  return out;
}

SessionManager::Json SessionManager::get_assignment(const std::string& id) const {
  const auto s = find(id);
  std::lock_guard lock(s->mutex);
  Json out{{"session", id}};
  const Matrix* P = &baseline_;
  if (s->latest_done) {
    out["source"] = "solve";
    out["job"] = s->latest_done->id;
    P = &*s->latest_done->assignment;
  } else {
    out["source"] = "baseline";
    out["baseline"] = baseline_label_;
    out["job"] = nullptr;
  }
  out["location_ids"] = dataset_->location_ids();
  out["object_ids"] = dataset_->object_ids();
  out["matrix"] = matrix_json(*P);
  return out;
}

void SessionManager::wait(const std::string& id, const std::string& job_id) const {
  const auto s = find(id);
  std::unique_lock lock(s->mutex);
  s->idle.wait(lock, [&] {
    if (!job_id.empty()) {
      for (const auto& j : s->jobs) {
        if (j->id == job_id) return j->status == "done" || j->status == "failed";
      }
      return true;
    }
    return !s->busy;
  });
}

void SessionManager::save_snapshot() const {
  if (!snapshot_) return;
  Json root{{"next_session", 0}, {"sessions", Json::array()}};
  std::vector<std::shared_ptr<Session>> sessions;
  {
    std::lock_guard lock(mutex_);
    root["next_session"] = next_session_;
    for (const auto& [id, s] : sessions_) sessions.push_back(s);
  }
  for (const auto& s : sessions) {
    std::lock_guard lock(s->mutex);
    Json js = session_json(*s);
    js.erase("solve_in_progress");
    js["baseline_fairness"] = s->baseline_fairness;
    auto jobs = Json::array();
    for (const auto& job : s->jobs) {
      Json jj{{"id", job->id}, {"status", job->status}};
      if (job->status == "done") {
        jj["report"] = job->report;
        jj["fairness"] = job->fairness;
        jj["assignment"] = matrix_json(*job->assignment);
      } else if (job->status == "failed") {
        jj["error"] = job->error;
      }
      jobs.push_back(std::move(jj));
    }
    js["jobs"] = std::move(jobs);
    root["sessions"].push_back(std::move(js));
  }
  static std::mutex file_mutex;
  std::lock_guard lock(file_mutex);
  const auto tmp = snapshot_->string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write snapshot '" + tmp + "'");
    out << root.dump(2) << '\n';
  }
  std::filesystem::rename(tmp, *snapshot_);
}

void SessionManager::load_snapshot() {
  std::ifstream in(*snapshot_);
  Json root;
  try {
    root = Json::parse(in);
    next_session_ = root.at("next_session").get<std::uint64_t>();
    for (const auto& js : root.at("sessions")) {
      auto s = std::make_shared<Session>();
      s->id = js.at("session").get<std::string>();
      s->config = defaults_.run_config();
      Json hyper = js.at("hyperparameters");
      hyper.erase("alpha");
      apply_hyper(hyper, s->config);
      s->groups = parse_groups(Json{{"groups", js.at("groups")}}, *dataset_);
      s->baseline_fairness = js.at("baseline_fairness");
      const auto location_ids = dataset_->location_ids();
      const auto object_ids = dataset_->object_ids();
      for (const auto& l : js.at("locks")) {
        const auto n = std::find(location_ids.begin(), location_ids.end(), l.at("location").get<std::string>());
        const auto m = std::find(object_ids.begin(), object_ids.end(), l.at("object").get<std::string>());
        if (n == location_ids.end() || m == object_ids.end()) throw Error("lock references unknown id");
        s->locks[{static_cast<std::size_t>(n - location_ids.begin()),
                  static_cast<std::size_t>(m - object_ids.begin())}] = l.at("weight").get<double>();
      }
      for (const auto& jj : js.at("jobs")) {
        auto job = std::make_shared<Job>();
        job->id = jj.at("id").get<std::string>();
        job->status = jj.at("status").get<std::string>();
        if (job->status == "done") {
          job->report = jj.at("report");
          job->fairness = jj.at("fairness");
          job->assignment = matrix_from_json(jj.at("assignment"));
          s->latest_done = job;
        } else if (job->status == "failed") {
          job->error = jj.at("error").get<std::string>();
        } else {
          job->status = "failed";
          job->error = "interrupted by service restart";
        }
        s->jobs.push_back(job);
      }
      sessions_[s->id] = s;
    }
  } catch (const Json::exception& e) {
    throw Error("snapshot '" + snapshot_->string() + "' is malformed: " + e.what());
  } catch (const ServiceError& e) {
    throw Error("snapshot '" + snapshot_->string() + "' is malformed: " + e.what());
  }
}

namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(2), "application/json");
}

Json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return Json::object();
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error& e) {
    throw bad_request(std::string("request body is not valid JSON: ") + e.what());
  }
}

}  // namespace

bool serve(SessionManager& manager, const ServeOptions& options,
           std::function<void(int bound_port)> on_ready, std::stop_token stop) {
  httplib::Server server;

  // Wraps a handler so every failure becomes a JSON error object.
  auto guarded = [](auto handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
      try {
        handler(req, res);
      } catch (const ServiceError& e) {
        send_json(res, e.to_json(), e.status());
      } catch (const std::exception& e) {
        send_json(res, ServiceError(500, "internal", e.what()).to_json(), 500);
      }
    };
  };
  auto session_id = [](const httplib::Request& req) { return req.matches[1].str(); };

  server.Get("/health", guarded([](const httplib::Request&, httplib::Response& res) {
    send_json(res, Json{{"status", "ok"}});
  }));
  server.Get("/dataset", guarded([&manager](const httplib::Request&, httplib::Response& res) {
    const auto& d = manager.dataset();
    const Vector h = d.location_capacities();
    const Vector k = d.object_capacities();
    send_json(res, Json{{"schema", Json::parse(schema_to_json(d.schema))},
                        {"location_ids", d.location_ids()},
                        {"object_ids", d.object_ids()},
                        {"h", std::vector<double>(h.data(), h.data() + h.size())},
                        {"k", std::vector<double>(k.data(), k.data() + k.size())},
                        {"warnings", d.warnings}});
  }));
  server.Post("/sessions", guarded([&manager](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.create_session(parse_body(req)), 201);
  }));
  server.Get(R"(/sessions/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.get_session(session_id(req)));
  }));
  auto hyper = guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.update_hyperparams(session_id(req), parse_body(req)));
  });
  server.Put(R"(/sessions/([^/]+)/hyperparams)", hyper);
  server.Post(R"(/sessions/([^/]+)/hyperparams)", hyper);
  auto locks = guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.set_locks(session_id(req), parse_body(req)));
  });
  server.Put(R"(/sessions/([^/]+)/locks)", locks);
  server.Post(R"(/sessions/([^/]+)/locks)", locks);
  server.Post(R"(/sessions/([^/]+)/solve)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.solve_async(session_id(req)), 202);
  }));
  server.Get(R"(/sessions/([^/]+)/report)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.get_report(session_id(req), req.get_param_value("job")));
  }));
  server.Get(R"(/sessions/([^/]+)/jobs/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.get_report(session_id(req), req.matches[2].str()));
  }));
  server.Get(R"(/sessions/([^/]+)/fairness)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.get_fairness(session_id(req)));
  }));
  server.Get(R"(/sessions/([^/]+)/assignment)", guarded([&](const httplib::Request& req, httplib::Response& res) {
    send_json(res, manager.get_assignment(session_id(req)));
  }));
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    const auto code = res.status == 404 ? "not_found" : "http_error";
    send_json(res, ServiceError(res.status, code, "no route for " + req.method + " " + req.path).to_json(),
              res.status);
  });

  int port = options.port;
  if (port == 0) {
    port = server.bind_to_any_port(options.host);
    if (port < 0) return false;
  } else if (!server.bind_to_port(options.host, port)) {
    return false;
  }
  std::stop_callback on_stop(stop, [&server] { server.stop(); });
  if (on_ready) on_ready(port);
  if (stop.stop_requested()) return true;
  return server.listen_after_bind();
}

}  // namespace opart
