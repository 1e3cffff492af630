#include "opart/cli.hpp"

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "opart/analysis.hpp"
#include "opart/config.hpp"
#include "opart/error.hpp"
#include "opart/fairness.hpp"
#include "opart/ingest.hpp"
#include "opart/io_format.hpp"
#include "opart/pipeline.hpp"
#include "opart/service.hpp"

namespace opart {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

/// Flags shared by every subcommand that runs the optimizer. Unset flags fall
/// back to the config file, then to built-in defaults.
struct SolveFlags {
  std::string config;
  std::optional<double> alpha, beta, epsilon_floor, lambda_bar, tau_bar, step, lock_strength;
  std::optional<std::string> init, step_mode;
  std::optional<int> max_iters, r, rounds;
  std::optional<std::uint64_t> seed, occupancy_seed;

  void add_to(CLI::App& app, bool with_lists) {
    app.add_option("--config", config, "JSON file with default settings")->check(CLI::ExistingFile);
    app.add_option("--alpha", alpha, "Exponent on the distance in the score (default -1)");
    if (!with_lists) {
      app.add_option("--beta", beta, "Softmax temperature (default 100)");
      app.add_option("--lambda-bar", lambda_bar, "Capacity penalty multiplier (default 1)");
      app.add_option("--tau-bar", tau_bar, "Status-quo penalty multiplier (default 1)");
    }
    app.add_option("--epsilon-floor", epsilon_floor, "Floor on distances and rarities (default 1e-6)");
    app.add_option("--init", init, "Initialization: uniform, current or random");
    app.add_option("--step-mode", step_mode, "Step size rule: theoretical, safe or paper");
    app.add_option("--step", step, "Explicit step size (overrides --step-mode)");
    app.add_option("--max-iters", max_iters, "Gradient iterations (default 1000)");
    app.add_option("--r", r, "Samples for hyperparameter scaling (default 50)");
    app.add_option("--seed", seed, "Seed for random initialization and scaling samples");
    app.add_option("--occupancy-seed", occupancy_seed, "Seed of the occupancy draw");
    app.add_option("--rounds", rounds, "Occupancy resamplings for fairness (default 50)");
    app.add_option("--lock-strength", lock_strength, "Lock weight relative to the Lipschitz constant");
  }

  Defaults resolve() const {
    Defaults d = config.empty() ? Defaults{} : load_defaults(config);
    if (alpha) d.cost.alpha = *alpha;
    if (beta) d.cost.beta = *beta;
    if (epsilon_floor) d.cost.epsilon_floor = *epsilon_floor;
    if (lambda_bar) d.hyper.lambda_bar = *lambda_bar;
    if (tau_bar) d.hyper.tau_bar = *tau_bar;
    if (step) d.hyper.step = *step;
    if (max_iters) d.hyper.max_iters = *max_iters;
    if (r) d.hyper.scaling_samples = *r;
    if (seed) d.seed = *seed;
    if (occupancy_seed) d.occupancy_seed = *occupancy_seed;
    if (rounds) d.rounds = *rounds;
    if (lock_strength) d.lock_strength = *lock_strength;
    try {
      if (init) d.init = parse_init_scheme(*init);
      if (step_mode) d.hyper.step_mode = parse_step_mode(*step_mode);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
    if (d.hyper.max_iters < 1) throw UsageError("--max-iters must be at least 1");
    if (d.hyper.scaling_samples < 1) throw UsageError("--r must be at least 1");
    if (d.rounds < 1) throw UsageError("--rounds must be at least 1");
    if (!(d.cost.beta > 0.0)) throw UsageError("--beta must be positive");
    if (!(d.cost.epsilon_floor > 0.0)) throw UsageError("--epsilon-floor must be positive");
    if (!(d.hyper.lambda_bar >= 0.0) || !(d.hyper.tau_bar >= 0.0)) {
      throw UsageError("--lambda-bar and --tau-bar must be nonnegative");
    }
    if (!(d.hyper.step >= 0.0)) throw UsageError("--step must be nonnegative");
    if (!(d.lock_strength > 0.0)) throw UsageError("--lock-strength must be positive");
    d.hyper.alpha = d.cost.alpha;
    d.hyper.beta = d.cost.beta;
    return d;
  }
};

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      values.push_back(parse_double(item));
    } catch (const Error&) {
      throw UsageError(std::string(flag) + ": '" + item + "' is not a number");
    }
  }
  if (values.empty()) throw UsageError(std::string(flag) + " needs at least one value");
  return values;
}

/// "<dimension>:<cat>[+<cat>...]" names the disadvantaged categories.
GroupSpec parse_group(const std::string& text, const AttributeSchema& schema) {
  const auto colon = text.find(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw UsageError("--group expects <dimension>:<category>[+<category>...], got '" + text + "'");
  }
  GroupSpec spec;
  spec.dimension = text.substr(0, colon);
  std::stringstream in(text.substr(colon + 1));
  std::string cat;
  while (std::getline(in, cat, '+')) spec.disadvantaged.insert(cat);
  try {
    ResolvedGroup(spec, schema);
  } catch (const Error& e) {
    throw UsageError(std::string("--group: ") + e.what());
  }
  return spec;
}

std::vector<GroupSpec> resolve_groups(const std::vector<std::string>& flags, const Dataset& dataset) {
  if (flags.empty()) return default_groups(dataset.schema, dataset.collection());
  std::vector<GroupSpec> groups;
  for (const auto& f : flags) groups.push_back(parse_group(f, dataset.schema));
  return groups;
}

std::vector<std::string> group_labels(const std::vector<GroupSpec>& groups, const AttributeSchema& schema) {
  std::vector<std::string> labels;
  for (const auto& g : groups) labels.push_back(ResolvedGroup(g, schema).label());
  return labels;
}

/// "<location id>:<object id>[:<value>]".
Lock parse_lock(const std::string& text, const Dataset& dataset) {
  std::vector<std::string> parts;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ':')) parts.push_back(part);
  if (parts.size() < 2 || parts.size() > 3) {
    throw UsageError("--lock expects <location>:<object>[:<value>], got '" + text + "'");
  }
  const auto locations = dataset.location_ids();
  const auto objects = dataset.object_ids();
  const auto n = std::find(locations.begin(), locations.end(), parts[0]);
  const auto m = std::find(objects.begin(), objects.end(), parts[1]);
  if (n == locations.end()) throw UsageError("--lock: unknown location '" + parts[0] + "'");
  if (m == objects.end()) throw UsageError("--lock: unknown object '" + parts[1] + "'");
  Lock lock;
  lock.location = static_cast<std::size_t>(n - locations.begin());
  lock.object = static_cast<std::size_t>(m - objects.begin());
  if (parts.size() == 3) {
    try {
      lock.value = parse_double(parts[2]);
    } catch (const Error&) {
      throw UsageError("--lock: '" + parts[2] + "' is not a number");
    }
  }
  return lock;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << text;
  if (text.empty() || text.back() != '\n') out << '\n';
}

template <typename Fn>
void write_stream(const fs::path& path, Fn fn) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  fn(out);
}

Dataset open_dataset(const std::string& dir, std::ostream& err) {
  Dataset d = load_dataset(fs::path(dir));
  for (const auto& w : d.warnings) err << "warning: " << w << '\n';
  return d;
}

int cmd_synth(const SyntheticSpec& spec, std::uint64_t seed, const std::string& out_dir, std::ostream& out) {
  if (spec.objects < 1 || spec.locations < 1 || spec.users < 1) {
    throw UsageError("--objects, --locations and --users must be at least 1");
  }
  for (int c : spec.cardinalities) {
    if (c < 2) throw UsageError("every cardinality must be at least 2");
  }
  const Dataset d = generate_synthetic(spec, seed);
  save_dataset(d, out_dir);
  out << Json{{"dataset", out_dir},
              {"objects", d.num_objects()},
              {"locations", d.num_locations()},
              {"users", d.users.size()},
              {"warnings", d.warnings}}
             .dump(2)
      << '\n';
  return exit_ok;
}

int cmd_solve(const SolveFlags& flags, const std::string& dataset_dir, const std::vector<std::string>& lock_flags,
              bool early_stop, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const Defaults d = flags.resolve();
  const Dataset dataset = open_dataset(dataset_dir, err);
  RunConfig config = d.run_config();
  config.early_stop = early_stop;
  for (const auto& l : lock_flags) config.locks.push_back(parse_lock(l, dataset));

  const Problem problem = build_problem(dataset, d.cost, d.occupancy_seed, d.filling);
  const RunResult result = run_solve(problem, config);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  save_assignment(result.report.final.entries, dataset, dir / "assignment.csv");
  write_text(dir / "report.json", solve_report_to_json(result));
  write_stream(dir / "cost.csv", [&](std::ostream& o) {
    write_cost_csv(o, problem.cost, dataset.location_ids(), dataset.object_ids());
  });
  write_text(dir / "occupancy.json", occupancy_to_json(problem.occupancy, dataset.users, dataset.locations));
  out << Json{{"out", out_dir},
              {"objective", result.report.terms.total},
              {"iterations", result.report.iterations},
              {"capacity_residual", result.report.capacity_residual}}
             .dump(2)
      << '\n';
  return exit_ok;
}

int cmd_evaluate(const SolveFlags& flags, const std::string& dataset_dir,
                 const std::vector<std::string>& assignment_flags, const std::vector<std::string>& group_flags,
                 const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const Defaults d = flags.resolve();
  const Dataset dataset = open_dataset(dataset_dir, err);
  const auto groups = resolve_groups(group_flags, dataset);

  std::vector<NamedAssignment> rows;
  if (dataset.current) rows.push_back({"Baseline", *dataset.current});
  if (!assignment_flags.empty()) {
    for (const auto& a : assignment_flags) {
      const auto eq = a.find('=');
      const std::string name = eq == std::string::npos ? fs::path(a).parent_path().filename().string() : a.substr(0, eq);
      const std::string path = eq == std::string::npos ? a : a.substr(eq + 1);
      if (!fs::exists(path)) throw UsageError("--assignment: no such file '" + path + "'");
      rows.push_back({name.empty() ? path : name, load_assignment(path, dataset)});
    }
  } else {
    // Optimized rows, one per initialization scheme.
    const Problem problem = build_problem(dataset, d.cost, d.occupancy_seed, d.filling);
    for (const auto scheme : {InitScheme::uniform, InitScheme::current, InitScheme::random}) {
      if (scheme == InitScheme::current && !dataset.current) continue;
      RunConfig config = d.run_config();
      config.init = scheme;
      const auto result = run_solve(problem, config);
      std::string name = to_string(scheme);
      name[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
      rows.push_back({name, result.report.final.entries});
    }
  }
  const auto rounds = resample(dataset.users, dataset.locations, d.rounds,
                               d.occupancy_seed, d.filling);
  const auto reports = fairness_table(rows, rounds, groups, dataset.schema, dataset.users, dataset.collection());

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  auto j = Json::parse(fairness_to_json(reports));
  j["rounds"] = d.rounds;
  write_text(dir / "fairness.json", j.dump(2));
  const auto table = fairness_to_text(reports);
  write_text(dir / "fairness.txt", table);
  out << table;
  return exit_ok;
}

struct GridFlags {
  std::string betas = "100";
  std::string lambda_bars = "1";
  std::string tau_bars = "1";
  unsigned threads = 0;

  void add_to(CLI::App& app) {
    app.add_option("--beta", betas, "Comma-separated beta values")->capture_default_str();
    app.add_option("--lambda-bar", lambda_bars, "Comma-separated lambda_bar values")->capture_default_str();
    app.add_option("--tau-bar", tau_bars, "Comma-separated tau_bar values")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads (0 = all cores)");
  }

  SweepSpec spec(const Defaults& d) const {
    SweepSpec s;
    s.betas = parse_list(betas, "--beta");
    s.lambda_bars = parse_list(lambda_bars, "--lambda-bar");
    s.tau_bars = parse_list(tau_bars, "--tau-bar");
    s.base = d.run_config();
    s.cost = d.cost;
    s.occupancy_seed = d.occupancy_seed;
    s.filling = d.filling;
    s.threads = threads;
    return s;
  }
};

int cmd_sweep(const SolveFlags& flags, const GridFlags& grid, const std::string& dataset_dir,
              const std::vector<std::string>& group_flags, const std::string& out_dir, std::ostream& out,
              std::ostream& err) {
  const Defaults d = flags.resolve();
  const SweepSpec spec = grid.spec(d);
  const Dataset dataset = open_dataset(dataset_dir, err);
  const auto groups = resolve_groups(group_flags, dataset);
  const auto rounds = resample(dataset.users, dataset.locations, d.rounds,
                               d.occupancy_seed, d.filling);
  const auto cells = sweep_grid(dataset, spec, rounds, groups);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_stream(dir / "u_grid.csv", [&](std::ostream& o) {
    write_sweep_csv(o, cells, group_labels(groups, dataset.schema));
  });
  write_text(dir / "plot_u_grid.py", sweep_plot_script("u_grid.csv"));
  std::size_t invalid = 0;
  for (const auto& c : cells) invalid += c.valid ? 0 : 1;
  out << Json{{"cells", cells.size()}, {"invalid", invalid}, {"out", out_dir}}.dump(2) << '\n';
  return exit_ok;
}

int cmd_embed(const SolveFlags& flags, const GridFlags& grid, int dim, int clusters, double cap,
              const std::string& dataset_dir, const std::string& out_dir, std::ostream& out, std::ostream& err) {
  const Defaults d = flags.resolve();
  const SweepSpec spec = grid.spec(d);
  const Dataset dataset = open_dataset(dataset_dir, err);
  // The embedding needs only the solutions; one round keeps the sweep cheap.
  const auto rounds = resample(dataset.users, dataset.locations, 1, d.occupancy_seed, d.filling);
  const auto cells = sweep_grid(dataset, spec, rounds, {});
  const auto family = family_from_sweep(cells);
  if (family.matrices.size() < 2) throw Error("embedding needs at least two successful solves");
  if (dim >= static_cast<int>(family.matrices.size())) {
    throw UsageError("--dim must be smaller than the number of solutions");
  }
  const Matrix W = similarity(family, cap);
  const Matrix coords = spectral_embed(W, dim);
  std::vector<int> labels;
  if (clusters > 0) labels = kmeans(coords, clusters);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_stream(dir / "embedding.csv", [&](std::ostream& o) { write_embedding_csv(o, coords, family, labels); });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < family.matrices.size(); ++i) ids.push_back(std::to_string(i));
  write_stream(dir / "similarity.csv", [&](std::ostream& o) { write_matrix_csv(o, W, ids, ids, "index"); });
  write_text(dir / "plot_embedding.py", embedding_plot_script("embedding.csv"));
  out << Json{{"solutions", family.matrices.size()}, {"clusters", labels}, {"out", out_dir}}.dump(2) << '\n';
  return exit_ok;
}

std::stop_source* active_server = nullptr;

extern "C" void handle_signal(int) {
  if (active_server) active_server->request_stop();
}

int cmd_serve(const SolveFlags& flags, const std::string& dataset_dir, const ServeOptions& options,
              const std::string& snapshot, std::ostream& out, std::ostream& err) {
  const Defaults d = flags.resolve();
  auto dataset = std::make_shared<const Dataset>(open_dataset(dataset_dir, err));
  SessionManager manager(dataset, d, snapshot.empty() ? std::nullopt : std::optional<fs::path>(snapshot));
  std::stop_source stop;
  active_server = &stop;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  const bool ok = serve(manager, options, [&](int port) {
    out << Json{{"listening", options.host + ":" + std::to_string(port)}}.dump() << std::endl;
  }, stop.get_token());
  active_server = nullptr;
  if (!ok) throw Error("cannot listen on " + options.host + ":" + std::to_string(options.port));
  return exit_ok;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message,
                  const std::vector<std::string>& problems = {}) {
  Json j{{"error", {{"code", code}, {"message", message}}}};
  if (!problems.empty()) j["error"]["problems"] = problems;
  err << j.dump(2) << '\n';
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fairness-aware assignment of artworks to campus buildings", "opart"};
  app.require_subcommand(1);

  std::string dataset_dir, out_dir;

  SyntheticSpec synth_spec;
  std::uint64_t synth_seed = 0;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--out", out_dir, "Output dataset directory")->required();
  synth->add_option("--objects", synth_spec.objects, "Number of artworks M")->capture_default_str();
  synth->add_option("--locations", synth_spec.locations, "Number of buildings N")->capture_default_str();
  synth->add_option("--users", synth_spec.users, "Number of students T")->capture_default_str();
  synth->add_option("--cardinalities", synth_spec.cardinalities, "Categories per dimension")
      ->delimiter(',')
      ->capture_default_str();
  synth->add_option("--skew", synth_spec.skew, "Majority share among artworks")->capture_default_str();
  synth->add_option("--user-skew", synth_spec.user_skew, "Majority share among students")->capture_default_str();
  synth->add_option("--fill", synth_spec.fill, "Wall capacity as a share of object capacity")
      ->capture_default_str();
  synth->add_option("--seed", synth_seed, "Random seed")->capture_default_str();

  SolveFlags solve_flags;
  std::vector<std::string> locks;
  bool early_stop = false;
  auto* solve = app.add_subcommand("solve", "Optimize the assignment for one hyperparameter setting");
  solve->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  solve->add_option("--out", out_dir, "Output directory")->required();
  solve_flags.add_to(*solve, false);
  solve->add_option("--lock", locks, "Lock <location>:<object>[:<value>] (repeatable)");
  solve->add_flag("--early-stop", early_stop, "Stop once the objective stops changing");

  SolveFlags eval_flags;
  std::vector<std::string> assignments, eval_groups;
  auto* evaluate = app.add_subcommand("evaluate", "Fairness table over resampled occupancies");
  evaluate->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  eval_flags.add_to(*evaluate, false);
  evaluate->add_option("--assignment", assignments,
                       "[name=]assignment.csv to evaluate (repeatable); solves all inits when absent");
  evaluate->add_option("--group", eval_groups, "Disadvantaged group <dimension>:<cat>[+<cat>...] (repeatable)");

  SolveFlags sweep_flags;
  GridFlags sweep_grid_flags;
  std::vector<std::string> sweep_groups;
  auto* sweep = app.add_subcommand("sweep", "Unfairness over a hyperparameter grid");
  sweep->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep_flags.add_to(*sweep, true);
  sweep_grid_flags.add_to(*sweep);
  sweep->add_option("--group", sweep_groups, "Disadvantaged group <dimension>:<cat>[+<cat>...] (repeatable)");

  SolveFlags embed_flags;
  GridFlags embed_grid_flags;
  int dim = 2, clusters = 2;
  double cap = 1e12;
  auto* embed = app.add_subcommand("embed", "Spectral embedding of swept solutions");
  embed->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  embed->add_option("--out", out_dir, "Output directory")->required();
  embed_flags.add_to(*embed, true);
  embed_grid_flags.add_to(*embed);
  embed->add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber)->capture_default_str();
  embed->add_option("--clusters", clusters, "k-means clusters (0 disables)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  embed->add_option("--cap", cap, "Similarity cap for identical solutions")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  SolveFlags serve_flags;
  ServeOptions serve_options;
  std::string snapshot;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP/JSON service for curator sessions");
  serve_cmd->add_option("--dataset", dataset_dir, "Dataset directory")->required();
  serve_flags.add_to(*serve_cmd, false);
  serve_cmd->add_option("--host", serve_options.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--port", serve_options.port, "Port (0 picks a free one)")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  serve_cmd->add_option("--snapshot", snapshot, "Session snapshot file, restored at startup");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return exit_ok;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what());
    return exit_usage;
  }

  try {
    if (*synth) return cmd_synth(synth_spec, synth_seed, out_dir, out);
    if (*solve) return cmd_solve(solve_flags, dataset_dir, locks, early_stop, out_dir, out, err);
    if (*evaluate) return cmd_evaluate(eval_flags, dataset_dir, assignments, eval_groups, out_dir, out, err);
    if (*sweep) return cmd_sweep(sweep_flags, sweep_grid_flags, dataset_dir, sweep_groups, out_dir, out, err);
    if (*embed) {
      return cmd_embed(embed_flags, embed_grid_flags, dim, clusters, cap, dataset_dir, out_dir, out, err);
    }
    if (*serve_cmd) return cmd_serve(serve_flags, dataset_dir, serve_options, snapshot, out, err);
  } catch (const UsageError& e) {
    report_error(err, "usage", e.what());
    return exit_usage;
  } catch (const ValidationError& e) {
    report_error(err, "validation", e.what(), e.problems());
    return exit_runtime;
  } catch (const std::exception& e) {
    report_error(err, "runtime", e.what());
    return exit_runtime;
  }
  return exit_usage;
}

}  // namespace opart
