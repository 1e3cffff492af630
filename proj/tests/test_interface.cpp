#include <doctest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "opart/cli.hpp"
#include "opart/config.hpp"
#include "opart/error.hpp"
#include "opart/ingest.hpp"
#include "opart/io_format.hpp"
#include "opart/pipeline.hpp"
#include "opart/service.hpp"
#include "oracles.hpp"

// After Eigen: the socket headers define a `_res` macro that collides with
// Eigen parameter names.
#include <httplib.h>

using namespace opart;
namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() /
            ("opart_interface_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

Dataset fixture_dataset(std::size_t objects = 40, std::size_t locations = 6) {
  SyntheticSpec spec;
  spec.objects = objects;
  spec.locations = locations;
  spec.users = 300;
  spec.cardinalities = {2, 3};
  spec.skew = 0.8;
  return generate_synthetic(spec, 21);
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "opart");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Matrix matrix_of(const Json& rows) {
  Matrix P(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.at(0).size()));
  for (Eigen::Index n = 0; n < P.rows(); ++n) {
    for (Eigen::Index m = 0; m < P.cols(); ++m) {
      P(n, m) = rows.at(static_cast<std::size_t>(n)).at(static_cast<std::size_t>(m)).get<double>();
    }
  }
  return P;
}

Defaults quick_defaults() {
  Defaults d;
  d.rounds = 5;
  d.hyper.max_iters = 300;
  return d;
}

template <typename F>
ServiceError service_error(F&& f) {
  try {
    f();
  } catch (const ServiceError& e) {
    return e;
  }
  FAIL("expected a service error");
  return ServiceError(0, "", "");
}

}  // namespace

TEST_CASE("config defaults") {
  const auto d = parse_defaults(R"({"alpha": -2, "beta": 10, "step_mode": "safe", "max_iters": 10,
                                    "init": "random", "seed": 4, "rounds": 3,
                                    "filling": {"public_fraction": 0.05}, "lock_strength": 50})");
  CHECK(d.cost.alpha == -2.0);
  CHECK(d.hyper.alpha == -2.0);
  CHECK(d.cost.beta == 10.0);
  CHECK(d.hyper.beta == 10.0);
  CHECK(d.hyper.step_mode == StepMode::safe);
  CHECK(d.hyper.max_iters == 10);
  CHECK(d.init == InitScheme::random);
  CHECK(d.seed == 4);
  CHECK(d.rounds == 3);
  CHECK(d.filling.public_fraction == 0.05);
  CHECK(d.lock_strength == 50.0);
  // Keys not given keep the base values.
  CHECK(d.hyper.lambda_bar == 1.0);
  CHECK(d.hyper.scaling_samples == 50);

  CHECK(parse_defaults(defaults_to_json(d)).hyper.beta == 10.0);
  CHECK(parse_defaults(defaults_to_json(d)).filling.public_fraction == 0.05);

  CHECK_THROWS_AS(parse_defaults(R"({"betta": 1})"), Error);
  CHECK_THROWS_AS(parse_defaults(R"({"beta": "high"})"), Error);
  CHECK_THROWS_AS(parse_defaults(R"({"beta": -1})"), Error);
  CHECK_THROWS_AS(parse_defaults(R"({"max_iters": 0})"), Error);
  CHECK_THROWS_AS(parse_defaults(R"({"step_mode": "fast"})"), Error);
  CHECK_THROWS_AS(parse_defaults("[1, 2]"), Error);
  CHECK_THROWS_AS(parse_defaults("{"), Error);
}

TEST_CASE("cli") {
  TempDir dir;
  const auto data = dir.path() / "data";
  REQUIRE(cli({"synth", "--out", data.string(), "--objects", "40", "--locations", "6", "--users", "300",
               "--skew", "0.8", "--seed", "21"})
              .code == exit_ok);
  REQUIRE(fs::exists(data / "assignment.csv"));

  SUBCASE("solve writes the assignment and report") {
    const auto run = dir.path() / "run";
    const auto r = cli({"solve", "--dataset", data.string(), "--beta", "100", "--lambda-bar", "1", "--tau-bar", "1",
                        "--init", "uniform", "--out", run.string()});
    REQUIRE(r.code == exit_ok);
    CHECK(r.err.empty());
    for (const char* f : {"assignment.csv", "report.json", "cost.csv", "occupancy.json"}) {
      CHECK(fs::exists(run / f));
    }
    const auto report = Json::parse(slurp(run / "report.json"));
    CHECK(report["iterations"] == 1000);
    CHECK(report["objective_trace"].size() == 1000);
    CHECK(report["init"] == "uniform");
    const Dataset ds = load_dataset(data);
    const Matrix P = load_assignment(run / "assignment.csv", ds);
    CHECK(AssignmentMatrix{P, ds.location_capacities()}.is_feasible(1e-9));
  }
  SUBCASE("solve with a lock") {
    const Dataset ds = load_dataset(data);
    const auto run = dir.path() / "locked";
    const std::string lock = ds.locations[2].id + ":" + ds.objects[7].id + ":1";
    REQUIRE(cli({"solve", "--dataset", data.string(), "--out", run.string(), "--lock", lock}).code == exit_ok);
    const Matrix P = load_assignment(run / "assignment.csv", ds);
    CHECK(P(2, 7) >= 0.99);
  }
  SUBCASE("evaluate reports 50-round statistics") {
    const auto out = dir.path() / "eval";
    const auto r = cli({"evaluate", "--dataset", data.string(), "--rounds", "50", "--max-iters", "200", "--out",
                        out.string()});
    REQUIRE(r.code == exit_ok);
    const auto j = Json::parse(slurp(out / "fairness.json"));
    CHECK(j["rounds"] == 50);
    // Baseline plus three initializations, two default groups each.
    CHECK(j["reports"].size() == 8);
    for (const auto& row : j["reports"]) CHECK(row["U_per_round"].size() == 50);
    CHECK(r.out.find("Baseline") != std::string::npos);
    CHECK(r.out.find("Random") != std::string::npos);
    CHECK(fs::exists(out / "fairness.txt"));
  }
  SUBCASE("sweep writes a 9-cell grid") {
    const auto out = dir.path() / "sweep";
    const auto r = cli({"sweep", "--dataset", data.string(), "--beta", "0.1,100,1e15", "--tau-bar", "1,100,10000",
                        "--rounds", "3", "--max-iters", "100", "--out", out.string()});
    REQUIRE(r.code == exit_ok);
    const auto table = CsvTable::read_file((out / "u_grid.csv").string());
    CHECK(table.rows().size() == 9);
    CHECK(table.column("beta") >= 0);
    CHECK(table.column("tau_bar") >= 0);
    CHECK(fs::exists(out / "plot_u_grid.py"));
  }
  SUBCASE("embed writes coordinates, similarity and clusters") {
    const auto out = dir.path() / "embed";
    const auto r = cli({"embed", "--dataset", data.string(), "--beta", "1,100", "--tau-bar", "1,10000", "--rounds",
                        "2", "--max-iters", "200", "--out", out.string()});
    REQUIRE(r.code == exit_ok);
    const auto coords = CsvTable::read_file((out / "embedding.csv").string());
    CHECK(coords.rows().size() == 4);
    CHECK(coords.column("cluster") >= 0);
    const auto sim = CsvTable::read_file((out / "similarity.csv").string());
    CHECK(sim.rows().size() == 4);
    CHECK(fs::exists(out / "plot_embedding.py"));
  }
  SUBCASE("config file layering: flags beat the file") {
    const auto cfg = dir.path() / "config.json";
    std::ofstream(cfg) << R"({"max_iters": 7, "beta": 5})";
    const auto run = dir.path() / "cfg";
    REQUIRE(cli({"solve", "--config", cfg.string(), "--dataset", data.string(), "--beta", "50", "--out",
                 run.string()})
                .code == exit_ok);
    const auto report = Json::parse(slurp(run / "report.json"));
    CHECK(report["iterations"] == 7);
    CHECK(report["hyperparameters"]["beta"] == 50.0);
  }
  SUBCASE("usage errors exit 2 with a JSON error") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"solve", "--dataset", data.string()},
             {"frobnicate"},
             {"solve", "--dataset", data.string(), "--out", "x", "--beta", "abc"},
             {"solve", "--dataset", data.string(), "--out", "x", "--init", "sideways"},
             {"solve", "--dataset", data.string(), "--out", "x", "--lock", "nonsense"},
             {"serve", "--dataset", data.string(), "--port", "70000"},
             {}}) {
      const auto r = cli(args);
      CHECK(r.code == exit_usage);
      const auto j = Json::parse(r.err);
      CHECK(j["error"]["code"] == "usage");
      CHECK_FALSE(j["error"]["message"].get<std::string>().empty());
    }
    const auto help = cli({"--help"});
    CHECK(help.code == exit_ok);
    CHECK(help.out.find("solve") != std::string::npos);
  }
  SUBCASE("runtime errors exit 1 with a JSON error") {
    const auto missing = cli({"solve", "--dataset", (dir.path() / "nowhere").string(), "--out",
                              (dir.path() / "o").string()});
    CHECK(missing.code == exit_runtime);
    CHECK(Json::parse(missing.err).contains("error"));

    const auto bad = dir.path() / "bad";
    fs::copy(data, bad);
    std::ofstream(bad / "collection.csv", std::ios::app) << "zzz,1,nope,nope\n";
    const auto r = cli({"solve", "--dataset", bad.string(), "--out", (dir.path() / "o2").string()});
    CHECK(r.code == exit_runtime);
    const auto j = Json::parse(r.err);
    CHECK(j["error"]["code"] == "validation");
    CHECK(j["error"]["problems"].size() >= 1);

    const auto neg = cli({"solve", "--dataset", data.string(), "--out", (dir.path() / "o3").string(), "--beta",
                          "-1"});
    CHECK(neg.code != exit_ok);
    CHECK(Json::parse(neg.err).contains("error"));
  }
  SUBCASE("the installed binary reports the same exit codes") {
#ifdef OPART_CLI_PATH
    const std::string bin = OPART_CLI_PATH;
    const auto quiet = " >" + (dir.path() / "stdout").string() + " 2>" + (dir.path() / "stderr").string();
    auto status = [](int raw) { return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1; };
    CHECK(status(std::system((bin + " frobnicate" + quiet).c_str())) == exit_usage);
    CHECK(Json::parse(slurp(dir.path() / "stderr"))["error"]["code"] == "usage");
    CHECK(status(std::system((bin + " solve --dataset /nonexistent --out " + (dir.path() / "o").string() + quiet)
                                 .c_str())) == exit_runtime);
    CHECK(status(std::system((bin + " solve --max-iters 20 --dataset " + data.string() + " --out " +
                              (dir.path() / "bin").string() + quiet)
                                 .c_str())) == exit_ok);
    CHECK(fs::exists(dir.path() / "bin" / "assignment.csv"));
#endif
  }
}

TEST_CASE("locks through the prior match the QP oracle") {
  const Dataset ds = fixture_dataset();
  const Problem problem = build_problem(ds, {}, 0);
  RunConfig config;
  // Pick an entry that the status quo leaves empty.
  Eigen::Index n = 1, m = 0;
  while ((*problem.current)(n, m) > 0.0) ++m;
  config.locks.push_back(Lock{static_cast<std::size_t>(n), static_cast<std::size_t>(m), 1.0, 0.0});
  const auto result = run_solve(problem, config);
  CHECK(result.report.final.entries(n, m) >= 0.99);

  // The lock weight is relative to the Lipschitz constant of the rest.
  const double lambda = result.hyper.lambda(), tau = result.hyper.tau();
  const double weight = config.lock_strength * std::max(lambda * static_cast<double>(problem.rows()) + tau, 1.0);
  const auto prior = build_prior(problem, tau, config.locks, weight);
  REQUIRE(prior.has_value());
  const Matrix ref = oracle::qp_minimizer(problem.cost.entries, problem.h, problem.k, lambda, 0.0,
                                          nullptr, 20000, &prior->weights, &prior->target);
  CHECK(ref(n, m) >= 0.99);
  CHECK((result.report.final.entries - ref).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("session manager") {
  auto dataset = std::make_shared<const Dataset>(fixture_dataset());
  SessionManager manager(dataset, quick_defaults());

  SUBCASE("baseline before any solve") {
    const auto s = manager.create_session(Json::object())["session"].get<std::string>();
    CHECK(s == "s1");
    const auto a = manager.get_assignment(s);
    CHECK(a["source"] == "baseline");
    CHECK(a["baseline"] == "current");
    CHECK(a["job"].is_null());
    CHECK((matrix_of(a["matrix"]) - *dataset->current).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(a["location_ids"].size() == dataset->num_locations());
    const auto f = manager.get_fairness(s);
    CHECK(f["rounds"] == 5);
    CHECK(f["baseline"].size() == 2);
    CHECK(f["latest"].is_null());
    CHECK(service_error([&] { manager.get_report(s); }).status() == 404);
  }
  SUBCASE("solve, poll and read the result") {
    const auto s = manager.create_session(Json{{"beta", 100.0}})["session"].get<std::string>();
    const auto job = manager.solve_async(s);
    CHECK(job["status"] == "queued");
    CHECK(job["job"] == "s1-j1");
    manager.wait(s);
    const auto report = manager.get_report(s);
    REQUIRE(report["status"] == "done");
    CHECK(report["report"]["iterations"] == 300);
    CHECK(manager.get_report(s, "s1-j1") == report);
    const auto a = manager.get_assignment(s);
    CHECK(a["source"] == "solve");
    CHECK(a["job"] == "s1-j1");
    const Matrix P = matrix_of(a["matrix"]);
    CHECK(AssignmentMatrix{P, dataset->location_capacities()}.is_feasible(1e-9));
    const auto f = manager.get_fairness(s);
    CHECK(f["job"] == "s1-j1");
    CHECK(f["latest"].size() == 2);
  }
  SUBCASE("locks pull the chosen entry to its value") {
    const auto s = manager.create_session(Json{{"max_iters", 2000}})["session"].get<std::string>();
    Eigen::Index m = 0;
    while ((*dataset->current)(3, m) > 0.0) ++m;
    const auto loc = dataset->locations[3].id;
    const auto obj = dataset->objects[static_cast<std::size_t>(m)].id;
    const auto out = manager.set_locks(s, Json{{"locks", {{{"location", loc}, {"object", obj}, {"weight", 1.0}}}}});
    CHECK(out["locks"].size() == 1);
    manager.solve_async(s);
    manager.wait(s);
    REQUIRE(manager.get_report(s)["status"] == "done");
    CHECK(matrix_of(manager.get_assignment(s)["matrix"])(3, m) >= 0.99);

    CHECK(service_error([&] {
            manager.set_locks(s, Json{{"locks", {{{"location", "nowhere"}, {"object", obj}}}}});
          }).status() == 400);
    CHECK(service_error([&] {
            manager.set_locks(s, Json{{"locks", {{{"location", loc}, {"object", obj}, {"weight", 1e6}}}}});
          }).code() == "bad_request");
    CHECK(service_error([&] { manager.set_locks(s, Json{{"lock", 1}}); }).status() == 400);
  }
  SUBCASE("a dominant prior returns the baseline") {
    // At tau_bar = 10000 the leftover pull of the cost grows with the number
    // of objects (about 5e-5 each), so the dominance fixture is a small one.
    SessionManager small(std::make_shared<const Dataset>(fixture_dataset(12, 3)), quick_defaults());
    const auto s = small.create_session(Json::object())["session"].get<std::string>();
    const auto updated = small.update_hyperparams(s, Json{{"tau_bar", 10000.0}, {"max_iters", 1000}});
    CHECK(updated["hyperparameters"]["tau_bar"] == 10000.0);
    small.solve_async(s);
    small.wait(s);
    REQUIRE(small.get_report(s)["status"] == "done");
    const Matrix P = matrix_of(small.get_assignment(s)["matrix"]);
    const double l1 = (P - small.baseline()).cwiseAbs().sum();
    MESSAGE("L1 distance to baseline at tau_bar = 10000: " << l1);
    CHECK(l1 < 1e-3);
  }
  SUBCASE("one solve at a time per session") {
    const auto s = manager.create_session(Json{{"max_iters", 20000}})["session"].get<std::string>();
    const auto other = manager.create_session(Json::object())["session"].get<std::string>();
    manager.solve_async(s);
    const auto e = service_error([&] { manager.solve_async(s); });
    CHECK(e.status() == 409);
    CHECK(std::string(e.what()) == "solve in progress");
    CHECK(e.code() == "solve_in_progress");
    // Reads and other sessions are not blocked.
    const auto start = std::chrono::steady_clock::now();
    const auto status = manager.get_report(s)["status"].get<std::string>();
    CHECK((status == "queued" || status == "running" || status == "done"));
    CHECK(manager.get_session(s)["session"] == s);
    CHECK(manager.get_assignment(s)["source"].is_string());
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::milliseconds(500));
    CHECK(manager.solve_async(other)["status"] == "queued");
    manager.wait(s);
    manager.wait(other);
    CHECK(manager.solve_async(s)["job"] == s + "-j2");
    manager.wait(s);
  }
  SUBCASE("unknown ids and bad requests") {
    CHECK(service_error([&] { manager.get_session("s99"); }).code() == "unknown_session");
    CHECK(service_error([&] { manager.get_assignment("nope"); }).status() == 404);
    CHECK(service_error([&] { manager.solve_async("nope"); }).status() == 404);
    const auto s = manager.create_session(Json::object())["session"].get<std::string>();
    manager.solve_async(s);
    manager.wait(s);
    CHECK(service_error([&] { manager.get_report(s, "s1-j9"); }).code() == "unknown_job");
    CHECK(service_error([&] { manager.create_session(Json{{"bogus", 1}}); }).status() == 400);
    CHECK(service_error([&] { manager.create_session(Json{{"beta", -1.0}}); }).status() == 400);
    CHECK(service_error([&] { manager.create_session(Json{{"beta", "x"}}); }).status() == 400);
    CHECK(service_error([&] {
            manager.create_session(Json{{"groups", {{{"dimension", "d0"}, {"disadvantaged", {"nope"}}}}}});
          }).status() == 400);
    CHECK(service_error([&] { manager.update_hyperparams(s, Json{{"groups", Json::array()}}); }).status() == 400);
    const auto e = service_error([&] { manager.get_session("zz"); });
    CHECK(e.to_json()["error"]["status"] == 404);
    CHECK(e.to_json()["error"]["code"] == "unknown_session");
  }
  SUBCASE("custom groups") {
    const auto s = manager
                       .create_session(Json{{"groups",
                                             {{{"dimension", "d0"},
                                               {"disadvantaged", {"d0c1"}},
                                               {"label", "minority"},
                                               {"complement_label", "majority"}}}}})["session"]
                       .get<std::string>();
    const auto f = manager.get_fairness(s);
    REQUIRE(f["baseline"].size() == 1);
    CHECK(f["baseline"][0]["group"] == "minority");
    CHECK(f["baseline"][0]["complement"] == "majority");
  }
}

TEST_CASE("replaying a request log reproduces the reports") {
  auto dataset = std::make_shared<const Dataset>(fixture_dataset());
  auto replay = [&] {
    SessionManager manager(dataset, quick_defaults());
    const auto s = manager.create_session(Json{{"init", "random"}, {"seed", 9}})["session"].get<std::string>();
    manager.update_hyperparams(s, Json{{"lambda_bar", 10.0}});
    manager.set_locks(s, Json{{"locks", {{{"location", dataset->locations[0].id},
                                          {"object", dataset->objects[5].id},
                                          {"weight", 0.5}}}}});
    manager.solve_async(s);
    manager.wait(s);
    return std::tuple{manager.get_report(s), manager.get_assignment(s), manager.get_fairness(s)};
  };
  const auto a = replay();
  const auto b = replay();
  CHECK(std::get<0>(a)["status"] == "done");
  CHECK(std::get<0>(a).dump() == std::get<0>(b).dump());
  CHECK(std::get<1>(a).dump() == std::get<1>(b).dump());
  CHECK(std::get<2>(a).dump() == std::get<2>(b).dump());
}

TEST_CASE("snapshots restore sessions across restarts") {
  TempDir dir;
  const auto snap = dir.path() / "sessions.json";
  auto dataset = std::make_shared<const Dataset>(fixture_dataset());
  Json session, report, assignment, fairness;
  {
    SessionManager manager(dataset, quick_defaults(), snap);
    const auto s = manager.create_session(Json{{"tau_bar", 3.0}})["session"].get<std::string>();
    manager.set_locks(s, Json{{"locks", {{{"location", dataset->locations[1].id},
                                          {"object", dataset->objects[2].id},
                                          {"weight", 1.0}}}}});
    manager.solve_async(s);
    manager.wait(s);
    session = manager.get_session(s);
    report = manager.get_report(s);
    assignment = manager.get_assignment(s);
    fairness = manager.get_fairness(s);
  }
  REQUIRE(fs::exists(snap));
  SessionManager restored(dataset, quick_defaults(), snap);
  CHECK(restored.get_session("s1").dump() == session.dump());
  CHECK(restored.get_report("s1").dump() == report.dump());
  CHECK(restored.get_fairness("s1").dump() == fairness.dump());
  const Matrix before = matrix_of(assignment["matrix"]);
  const Matrix after = matrix_of(restored.get_assignment("s1")["matrix"]);
  CHECK(before == after);
  // New sessions continue the numbering.
  CHECK(restored.create_session(Json::object())["session"] == "s2");
}

TEST_CASE("http endpoints") {
  auto dataset = std::make_shared<const Dataset>(fixture_dataset());
  SessionManager manager(dataset, quick_defaults());
  std::promise<int> ready;
  std::stop_source stop;
  std::jthread server([&] {
    const bool ok = serve(manager, {"127.0.0.1", 0}, [&](int port) { ready.set_value(port); }, stop.get_token());
    if (!ok) ready.set_value(-1);
  });
  const int port = ready.get_future().get();
  REQUIRE(port > 0);
  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(30, 0);

  auto json_of = [](const httplib::Result& r) { return Json::parse(r->body); };

  auto health = client.Get("/health");
  REQUIRE(health);
  CHECK(health->status == 200);
  CHECK(json_of(health)["status"] == "ok");

  auto ds = client.Get("/dataset");
  REQUIRE(ds);
  CHECK(json_of(ds)["object_ids"].size() == dataset->num_objects());

  auto created = client.Post("/sessions", R"({"beta": 100})", "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const auto s = json_of(created)["session"].get<std::string>();

  auto baseline = client.Get("/sessions/" + s + "/assignment");
  REQUIRE(baseline);
  CHECK(json_of(baseline)["source"] == "baseline");

  auto hyper = client.Put("/sessions/" + s + "/hyperparams", R"({"lambda_bar": 2})", "application/json");
  REQUIRE(hyper);
  CHECK(hyper->status == 200);
  CHECK(json_of(hyper)["hyperparameters"]["lambda_bar"] == 2.0);

  auto locks = client.Put("/sessions/" + s + "/locks",
                          Json{{"locks", {{{"location", dataset->locations[0].id},
                                           {"object", dataset->objects[0].id},
                                           {"weight", 1.0}}}}}
                              .dump(),
                          "application/json");
  REQUIRE(locks);
  CHECK(locks->status == 200);

  auto solve = client.Post("/sessions/" + s + "/solve", "", "application/json");
  REQUIRE(solve);
  CHECK(solve->status == 202);
  const auto job = json_of(solve)["job"].get<std::string>();
  Json status;
  for (int i = 0; i < 600; ++i) {
    auto r = client.Get("/sessions/" + s + "/report?job=" + job);
    REQUIRE(r);
    status = json_of(r);
    if (status["status"] == "done" || status["status"] == "failed") break;
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
  CHECK(status["status"] == "done");
  auto by_path = client.Get("/sessions/" + s + "/jobs/" + job);
  REQUIRE(by_path);
  CHECK(json_of(by_path)["status"] == "done");

  auto fairness = client.Get("/sessions/" + s + "/fairness");
  REQUIRE(fairness);
  CHECK(json_of(fairness)["job"] == job);

  auto missing = client.Get("/sessions/s42/assignment");
  REQUIRE(missing);
  CHECK(missing->status == 404);
  CHECK(json_of(missing)["error"]["code"] == "unknown_session");

  auto no_route = client.Get("/nothing/here");
  REQUIRE(no_route);
  CHECK(no_route->status == 404);
  CHECK(json_of(no_route)["error"]["code"] == "not_found");

  auto bad = client.Post("/sessions", "{not json", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);
  CHECK(json_of(bad)["error"]["code"] == "bad_request");

  stop.request_stop();
}
