#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "opart/cost.hpp"
#include "opart/fairness.hpp"
#include "opart/ingest.hpp"
#include "opart/optimizer.hpp"
#include "opart/population.hpp"

namespace opart {

/// Everything a solve needs, derived from a dataset and one occupancy draw.
struct Problem {
  CostMatrix cost;
  Vector h;
  Vector k;
  std::optional<Matrix> current;
  OccupancyAssignment occupancy;

  std::size_t rows() const { return static_cast<std::size_t>(cost.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(cost.cols()); }
};

Problem build_problem(const Dataset& dataset, const CostParams& params,
                      std::uint64_t occupancy_seed, const FillingOptions& filling = {});

enum class InitScheme { uniform, current, random };
InitScheme parse_init_scheme(const std::string& name);
std::string to_string(InitScheme scheme);

/// Curatorial lock: pull P(location, object) toward `value` with `strength`.
struct Lock {
  std::size_t location = 0;
  std::size_t object = 0;
  double value = 1.0;
  double strength = 0.0;  // 0 means RunConfig::lock_strength
};

struct RunConfig {
  HyperParams hyper;
  InitScheme init = InitScheme::uniform;
  std::uint64_t seed = 0;
  std::vector<Lock> locks;
  /// Per-entry prior weight for locks, relative to the theoretical Lipschitz
  /// constant lambda N + tau of the unlocked problem.
  double lock_strength = 1000.0;
  bool early_stop = false;
};

struct RunResult {
  SolveReport report;
  HyperParams hyper;  // with lambda_scale / tau_scale filled in
  ScalingFactors scaling;
};

/// The entry-wise prior for a run: tau on every entry of the current
/// assignment plus the lock overrides. Empty when neither applies.
std::optional<ProximalTerm> build_prior(const Problem& problem, double tau,
                                        const std::vector<Lock>& locks, double lock_strength);

/// Scales lambda and tau, builds the prior, initializes and solves.
RunResult run_solve(const Problem& problem, const RunConfig& config,
                    std::function<void(int, double)> progress = {});

std::string solve_report_to_json(const RunResult& result);

}  // namespace opart
