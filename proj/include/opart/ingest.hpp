#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opart/attributes.hpp"
#include "opart/matrix.hpp"
#include "opart/population.hpp"

namespace opart {

/// A displayable object (artwork) with hang capacity k.
struct ArtObject {
  std::string id;
  AttributeVector attributes;
  int capacity = 1;

  bool operator==(const ArtObject&) const = default;
};

struct Dataset {
  AttributeSchema schema;
  std::vector<ArtObject> objects;
  std::vector<Location> locations;
  std::vector<User> users;
  /// Existing hanging, N x M, rows summing to location capacities.
  std::optional<Matrix> current;
  std::vector<std::string> warnings;

  std::size_t num_objects() const noexcept { return objects.size(); }
  std::size_t num_locations() const noexcept { return locations.size(); }

  Vector location_capacities() const;  // h
  Vector object_capacities() const;    // k
  std::vector<AttributeVector> collection() const;
  std::vector<std::string> object_ids() const;
  std::vector<std::string> location_ids() const;

  /// Throws ValidationError listing every problem; fills `warnings` for
  /// soft issues such as sum(k) < sum(h).
  void validate();
};

struct DatasetPaths {
  std::filesystem::path schema;
  std::filesystem::path collection;
  std::filesystem::path locations;
  std::filesystem::path users;
  /// Optional; ignored when the file does not exist.
  std::filesystem::path assignment;

  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

AttributeSchema load_schema(const std::filesystem::path& path);
std::string schema_to_json(const AttributeSchema& schema);

Dataset load_dataset(const DatasetPaths& paths);
Dataset load_dataset(const std::filesystem::path& directory);
void save_dataset(const Dataset& dataset, const std::filesystem::path& directory);

/// Flags column: "academic:<school>;public;administrative;residential".
std::string format_location_flags(const Location& location);
void parse_location_flags(const std::string& text, Location& location);

/// Reads an assignment CSV and reorders it to the dataset's location and
/// object order.
Matrix load_assignment(const std::filesystem::path& path, const Dataset& dataset);
void save_assignment(const Matrix& P, const Dataset& dataset, const std::filesystem::path& path);

struct SyntheticSpec {
  std::size_t objects = 60;    // M
  std::size_t locations = 8;   // N
  std::size_t users = 500;     // T
  std::vector<int> cardinalities{2, 3};
  /// Share of the majority category (index 0) among objects; values below
  /// 1/T_d give uniform marginals.
  double skew = 0.0;
  /// Same for users.
  double user_skew = 0.0;
  /// Total wall capacity as a fraction of total object capacity.
  double fill = 0.5;
};

/// Reproducible dataset whose current assignment hangs majority-category
/// objects first, so fairness gaps exist by construction when skew > 0.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace opart
