#include "opart/population.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include <json.hpp>

#include "opart/error.hpp"
#include "opart/rng.hpp"

namespace opart {

namespace {

// Round half to even (the default floating-point rounding mode).
std::size_t draw_size(double fraction, std::size_t total) {
  return static_cast<std::size_t>(std::nearbyint(fraction * static_cast<double>(total)));
}

// Partial Fisher-Yates: k distinct indices drawn uniformly from [0, n).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n,
                                                    std::size_t k) {
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  k = std::min(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    std::swap(pool[i], pool[i + rng.index(n - i)]);
  }
  pool.resize(k);
  return pool;
}

void check_fraction(double f, const char* what) {
  if (!(f >= 0.0 && f <= 1.0)) {
    throw Error(std::string(what) + " fraction must lie in [0, 1]");
  }
}

}  // namespace

std::vector<std::size_t> split_by_beds(std::size_t cohort, const std::vector<int>& beds) {
  std::vector<std::size_t> out(beds.size(), 0);
  const long long total = std::accumulate(beds.begin(), beds.end(), 0LL);
  if (total <= 0) return out;
  if (cohort >= static_cast<std::size_t>(total)) {
    for (std::size_t i = 0; i < beds.size(); ++i) out[i] = static_cast<std::size_t>(beds[i]);
    return out;
  }
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < beds.size(); ++i) {
    const double exact = static_cast<double>(cohort) * beds[i] / static_cast<double>(total);
    out[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += out[i];
    remainders.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [frac, i] : remainders) {
    if (assigned >= cohort) break;
    if (out[i] < static_cast<std::size_t>(beds[i])) {
      ++out[i];
      ++assigned;
    }
  }
  return out;
}

OccupancyAssignment synthesize_occupancy(const std::vector<User>& users,
                                         const std::vector<Location>& locations,
                                         std::uint64_t seed,
                                         const FillingOptions& options) {
  if (locations.empty()) throw Error("at least one location is required");
  check_fraction(options.admin_fraction, "admin");
  check_fraction(options.public_fraction, "public");
  if (options.residential_fraction) check_fraction(*options.residential_fraction, "residential");

  Rng rng(seed);
  OccupancyAssignment occ;
  occ.seed = seed;
  occ.members.resize(locations.size());
  const std::size_t T = users.size();

  // Rule 1: academic buildings by school.
  std::set<std::string> schools_with_buildings;
  for (std::size_t n = 0; n < locations.size(); ++n) {
    for (const auto& school : locations[n].academic_schools) {
      schools_with_buildings.insert(school);
    }
  }
  std::set<std::string> orphaned;
  for (std::size_t i = 0; i < T; ++i) {
    if (!schools_with_buildings.count(users[i].school)) orphaned.insert(users[i].school);
  }
  for (const auto& school : orphaned) {
    occ.warnings.push_back("school '" + school + "' has no academic building; rule 1 skipped");
  }
  for (std::size_t n = 0; n < locations.size(); ++n) {
    const auto& schools = locations[n].academic_schools;
    if (schools.empty()) continue;
    for (std::size_t i = 0; i < T; ++i) {
      if (std::find(schools.begin(), schools.end(), users[i].school) != schools.end()) {
        occ.members[n].push_back(i);
      }
    }
  }

  // Rules 2 and 3: independent uniform draws per flagged building.
  const std::size_t admin_draw = draw_size(options.admin_fraction, T);
  const std::size_t public_draw = draw_size(options.public_fraction, T);
  for (std::size_t n = 0; n < locations.size(); ++n) {
    if (locations[n].administrative) {
      for (auto i : sample_without_replacement(rng, T, admin_draw)) occ.members[n].push_back(i);
    }
    if (locations[n].is_public) {
      for (auto i : sample_without_replacement(rng, T, public_draw)) occ.members[n].push_back(i);
    }
  }

  // Rule 4: residence halls.
  std::vector<std::size_t> halls;
  std::vector<int> beds;
  for (std::size_t n = 0; n < locations.size(); ++n) {
    if (locations[n].residential) {
      halls.push_back(n);
      beds.push_back(std::max(locations[n].beds, 0));
    }
  }
  if (!halls.empty()) {
    const auto total_beds =
        static_cast<std::size_t>(std::accumulate(beds.begin(), beds.end(), 0LL));
    std::size_t cohort = options.residential_fraction
                             ? draw_size(*options.residential_fraction, T)
                             : std::min(total_beds, T);
    if (total_beds == 0) {
      if (cohort > 0 || !options.residential_fraction) {
        occ.warnings.push_back("residential halls have no beds; rule 4 skipped");
      }
    } else {
      cohort = std::min({cohort, total_beds, T});
      auto chosen = sample_without_replacement(rng, T, cohort);
      const auto sizes = split_by_beds(cohort, beds);
      std::size_t offset = 0;
      for (std::size_t h = 0; h < halls.size(); ++h) {
        for (std::size_t j = 0; j < sizes[h]; ++j) {
          occ.members[halls[h]].push_back(chosen[offset + j]);
        }
        offset += sizes[h];
      }
    }
  }

  for (auto& m : occ.members) {
    std::sort(m.begin(), m.end());
    m.erase(std::unique(m.begin(), m.end()), m.end());
  }
  return occ;
}

std::vector<OccupancyAssignment> resample(const std::vector<User>& users,
                                          const std::vector<Location>& locations,
                                          int n_rounds, std::uint64_t base_seed,
                                          const FillingOptions& options) {
  if (n_rounds < 1) throw Error("resample: n_rounds must be at least 1");
  std::vector<OccupancyAssignment> rounds;
  rounds.reserve(static_cast<std::size_t>(n_rounds));
  for (int r = 0; r < n_rounds; ++r) {
    rounds.push_back(synthesize_occupancy(users, locations,
                                          base_seed + static_cast<std::uint64_t>(r), options));
  }
  return rounds;
}

std::vector<std::vector<AttributeVector>> occupant_attributes(
    const OccupancyAssignment& occupancy, const std::vector<User>& users) {
  std::vector<std::vector<AttributeVector>> out(occupancy.members.size());
  for (std::size_t n = 0; n < occupancy.members.size(); ++n) {
    out[n].reserve(occupancy.members[n].size());
    for (auto i : occupancy.members[n]) out[n].push_back(users.at(i).attributes);
  }
  return out;
}

std::string occupancy_to_json(const OccupancyAssignment& occupancy,
                              const std::vector<User>& users,
                              const std::vector<Location>& locations) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (std::size_t n = 0; n < occupancy.members.size(); ++n) {
    auto ids = nlohmann::ordered_json::array();
    for (auto i : occupancy.members[n]) ids.push_back(users.at(i).id);
    j[locations.at(n).id] = std::move(ids);
  }
  return j.dump(2);
}

}  // namespace opart
