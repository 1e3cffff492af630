#include "opart/pipeline.hpp"

#include <json.hpp>

#include "opart/error.hpp"

namespace opart {

Problem build_problem(const Dataset& dataset, const CostParams& params,
                      std::uint64_t occupancy_seed, const FillingOptions& filling) {
  Problem p;
  p.occupancy = synthesize_occupancy(dataset.users, dataset.locations, occupancy_seed, filling);
  const auto occupants = occupant_attributes(p.occupancy, dataset.users);
  for (std::size_t n = 0; n < occupants.size(); ++n) {
    if (occupants[n].empty()) {
      throw Error("location '" + dataset.locations[n].id + "' has empty occupancy");
    }
  }
  const auto collection = dataset.collection();
  p.cost = build_cost_matrix(occupants, collection, params);
  p.h = dataset.location_capacities();
  p.k = dataset.object_capacities();
  if (dataset.current) {
    // Snap onto the feasible set; a feasible input is returned unchanged.
    Matrix current = *dataset.current;
    project_rows(current, p.h);
    p.current = std::move(current);
  }
  return p;
}

InitScheme parse_init_scheme(const std::string& name) {
  if (name == "uniform") return InitScheme::uniform;
  if (name == "current") return InitScheme::current;
  if (name == "random") return InitScheme::random;
  throw Error("unknown init '" + name + "' (expected uniform, current or random)");
}

std::string to_string(InitScheme scheme) {
  switch (scheme) {
    case InitScheme::uniform: return "uniform";
    case InitScheme::current: return "current";
    case InitScheme::random: return "random";
  }
  return "uniform";
}

std::optional<ProximalTerm> build_prior(const Problem& problem, double tau,
                                        const std::vector<Lock>& locks, double lock_strength) {
  const auto N = static_cast<Eigen::Index>(problem.rows());
  const auto M = static_cast<Eigen::Index>(problem.cols());
  if (!problem.current && locks.empty()) return std::nullopt;
  ProximalTerm prior = problem.current ? ProximalTerm::uniform(*problem.current, tau)
                                       : ProximalTerm{Matrix::Zero(N, M), Matrix::Zero(N, M)};
  for (const auto& lock : locks) {
    if (lock.location >= problem.rows() || lock.object >= problem.cols()) {
      throw Error("lock (" + std::to_string(lock.location) + ", " + std::to_string(lock.object) +
                  ") is out of range");
    }
    if (!(lock.value >= 0.0)) throw Error("lock value must be nonnegative");
    const auto n = static_cast<Eigen::Index>(lock.location);
    const auto m = static_cast<Eigen::Index>(lock.object);
    prior.target(n, m) = lock.value;
    prior.weights(n, m) = lock.strength > 0.0 ? lock.strength : lock_strength;
  }
  return prior;
}

RunResult run_solve(const Problem& problem, const RunConfig& config,
                    std::function<void(int, double)> progress) {
  RunResult result;
  result.hyper = config.hyper;
  const Matrix* current = problem.current ? &*problem.current : nullptr;
  result.scaling = scale_hyperparams(problem.cost.entries, problem.h, problem.k, current,
                                     config.hyper.scaling_samples, config.seed);
  result.hyper.lambda_scale = result.scaling.lambda_scale;
  result.hyper.tau_scale = result.scaling.tau_scale;

  const double lambda = result.hyper.lambda();
  const double tau = current ? result.hyper.tau() : 0.0;
  const double N = static_cast<double>(problem.rows());
  const double lock_weight = config.lock_strength * std::max(lambda * N + tau, 1.0);
  AssignmentObjective objective(problem.cost.entries, problem.k, lambda,
                                build_prior(problem, tau, config.locks, lock_weight));

  SolveOptions options;
  options.max_iters = config.hyper.max_iters;
  options.early_stop = config.early_stop;
  options.progress = std::move(progress);
  // Locks are stiff; they go through the proximal step so the step size
  // only has to respect lambda N + tau.
  if (!config.locks.empty()) options.implicit_weight_threshold = tau;
  const double explicit_weight = config.locks.empty() ? objective.max_prior_weight() : tau;
  options.step = config.hyper.step > 0.0
                     ? config.hyper.step
                     : lipschitz_step(lambda, explicit_weight, problem.rows(), config.hyper.step_mode);

  AssignmentMatrix init;
  std::string label = to_string(config.init);
  switch (config.init) {
    case InitScheme::uniform:
      init = init_uniform(problem.h, problem.cols());
      break;
    case InitScheme::random:
      init = init_random(problem.h, problem.cols(), config.seed);
      break;
    case InitScheme::current:
      if (current) {
        init = AssignmentMatrix{*current, problem.h};
      } else {
        init = init_uniform(problem.h, problem.cols());
        label = "uniform (no current assignment)";
      }
      break;
  }
  result.report = solve(objective, init, options, label);
  return result;
}

std::string solve_report_to_json(const RunResult& result) {
  const auto& r = result.report;
  const auto& hp = result.hyper;
  nlohmann::ordered_json j;
  j["init"] = r.init_label;
  j["iterations"] = r.iterations;
  j["step"] = r.step;
  j["hyperparameters"] = {{"alpha", hp.alpha},           {"beta", hp.beta},
                          {"lambda_bar", hp.lambda_bar}, {"tau_bar", hp.tau_bar},
                          {"lambda_s", hp.lambda_scale}, {"tau_s", hp.tau_scale},
                          {"lambda", r.lambda},          {"tau", hp.tau()},
                          {"step_mode", to_string(hp.step_mode)},
                          {"max_iters", hp.max_iters},   {"r", hp.scaling_samples}};
  j["f1"] = r.terms.linear;
  j["f2"] = r.terms.capacity;
  j["f3"] = r.terms.prior;
  j["objective"] = r.terms.total;
  j["initial_objective"] = r.initial_objective;
  j["capacity_residual"] = r.capacity_residual;
  j["row_residual"] = r.final.row_residual();
  j["objective_trace"] = r.objective_trace;
  return j.dump(2);
}

}  // namespace opart
