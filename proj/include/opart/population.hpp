#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "opart/attributes.hpp"

namespace opart {

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
  bool operator==(const GeoPoint&) const = default;
};

/// A building (or any display location) with wall capacity h.
struct Location {
  std::string id;
  std::string name;
  int capacity = 1;
  std::vector<std::string> academic_schools;
  bool is_public = false;
  bool administrative = false;
  bool residential = false;
  int beds = 0;
  std::optional<GeoPoint> gps;

  bool has_flags() const noexcept {
    return !academic_schools.empty() || is_public || administrative || residential;
  }
  bool operator==(const Location&) const = default;
};

struct User {
  std::string id;
  AttributeVector attributes;
  std::string school;

  bool operator==(const User&) const = default;
};

/// Users passing through each location: members[n] holds sorted, distinct
/// indices into the user list.
struct OccupancyAssignment {
  std::vector<std::vector<std::size_t>> members;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  bool operator==(const OccupancyAssignment& o) const {
    return members == o.members && seed == o.seed;
  }
};

struct FillingOptions {
  double admin_fraction = 0.01;
  double public_fraction = 0.02;
  /// Size of the residential cohort as a fraction of all users; when unset the
  /// cohort is min(total beds, T).
  std::optional<double> residential_fraction;
};

/// Fills locations with users:
///  1. every user visits each academic building of their school;
///  2. a random admin_fraction of users visits each administrative building;
///  3. a random public_fraction of users visits each public building;
///  4. a shuffled residential cohort is split over halls by bed count.
OccupancyAssignment synthesize_occupancy(const std::vector<User>& users,
                                         const std::vector<Location>& locations,
                                         std::uint64_t seed,
                                         const FillingOptions& options = {});

/// Independent fillings with seeds base_seed, base_seed + 1, ...
std::vector<OccupancyAssignment> resample(const std::vector<User>& users,
                                          const std::vector<Location>& locations,
                                          int n_rounds, std::uint64_t base_seed,
                                          const FillingOptions& options = {});

/// Splits `cohort` people over halls proportionally to beds (largest
/// remainder), never exceeding any hall's bed count.
std::vector<std::size_t> split_by_beds(std::size_t cohort, const std::vector<int>& beds);

/// Attribute vectors of the occupants of each location.
std::vector<std::vector<AttributeVector>> occupant_attributes(
    const OccupancyAssignment& occupancy, const std::vector<User>& users);

/// {location_id: [user_id, ...]}
std::string occupancy_to_json(const OccupancyAssignment& occupancy,
                              const std::vector<User>& users,
                              const std::vector<Location>& locations);

}  // namespace opart
