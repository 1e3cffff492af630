#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "opart/cost.hpp"
#include "opart/optimizer.hpp"
#include "opart/pipeline.hpp"
#include "opart/population.hpp"

namespace opart {

/// Defaults shared by the CLI and the service; overridable from a JSON
/// config file, then by explicit flags or request fields.
struct Defaults {
  CostParams cost;
  HyperParams hyper;
  InitScheme init = InitScheme::uniform;
  /// Seed for random initialization and hyperparameter scaling samples.
  std::uint64_t seed = 0;
  /// Seed of the occupancy draw used to build the cost matrix; fairness
  /// rounds use occupancy_seed, occupancy_seed + 1, ...
  std::uint64_t occupancy_seed = 0;
  int rounds = 50;
  FillingOptions filling;
  double lock_strength = 1000.0;

  RunConfig run_config() const;
};

/// Applies the keys present in `json_text` on top of `base`. Unknown keys and
/// ill-typed values are errors.
Defaults parse_defaults(const std::string& json_text, Defaults base = {});
Defaults load_defaults(const std::filesystem::path& path, Defaults base = {});
std::string defaults_to_json(const Defaults& defaults);

}  // namespace opart
