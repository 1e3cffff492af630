#include "opart/cost.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

#include "opart/error.hpp"
#include "opart/io_format.hpp"

namespace opart {

namespace {

void check_params(const CostParams& p) {
  if (!(p.beta > 0.0)) throw Error("beta must be positive");
  if (!(p.epsilon_floor > 0.0)) throw Error("epsilon floor must be positive");
  if (!std::isfinite(p.alpha)) throw Error("alpha must be finite");
}

// Occupants collapsed into distinct attribute profiles. Each profile carries
// its multiplicity times -alpha * |s - mode|_n, i.e. the summed numerator.
struct LocationProfile {
  std::vector<AttributeVector> profiles;
  std::vector<double> numerators;
};

LocationProfile profile_location(std::span<const AttributeVector> occupants,
                                 const CostParams& params) {
  const CategoryCounts counts(occupants);
  const AttributeVector mode = counts.mode();
  std::map<AttributeVector, std::size_t> multiplicity;
  for (const auto& s : occupants) ++multiplicity[s];
  LocationProfile out;
  for (const auto& [profile, count] : multiplicity) {
    const double outlier = weighted_distance(profile, mode, counts);
    if (outlier == 0.0) continue;
    out.profiles.push_back(profile);
    out.numerators.push_back(-params.alpha * outlier * static_cast<double>(count));
  }
  return out;
}

double floored_rarity(const AttributeVector& object, const CategoryCounts& collection,
                      double floor) {
  return std::max(rarity_rho(object, collection).value, floor);
}

double profile_score(const LocationProfile& location, const AttributeVector& object,
                     double rho, const CostParams& params) {
  double sum = 0.0;
  for (std::size_t i = 0; i < location.profiles.size(); ++i) {
    const double dist = std::max(raw_distance(location.profiles[i], object), params.epsilon_floor);
    sum += location.numerators[i] / (params.beta * rho * dist);
  }
  return sum;
}

}  // namespace

double score(std::span<const AttributeVector> occupants, const AttributeVector& object,
             std::span<const AttributeVector> collection, const CostParams& params) {
  check_params(params);
  if (collection.empty()) throw Error("empty collection");
  const auto location = profile_location(occupants, params);
  const double rho = floored_rarity(object, CategoryCounts(collection), params.epsilon_floor);
  return profile_score(location, object, rho, params);
}

Vector softmax(const Vector& scores) {
  const double shift = scores.maxCoeff();
  Vector out = (scores.array() - shift).exp().matrix();
  return out / out.sum();
}

CostMatrix build_cost_matrix(const std::vector<std::vector<AttributeVector>>& occupants,
                             std::span<const AttributeVector> collection,
                             const CostParams& params) {
  check_params(params);
  if (collection.empty()) throw Error("empty collection");
  if (occupants.empty()) throw Error("no locations");
  const CategoryCounts collection_counts(collection);
  std::vector<double> rho(collection.size());
  for (std::size_t m = 0; m < collection.size(); ++m) {
    rho[m] = floored_rarity(collection[m], collection_counts, params.epsilon_floor);
  }

  const auto N = static_cast<Eigen::Index>(occupants.size());
  const auto M = static_cast<Eigen::Index>(collection.size());
  CostMatrix cost{Matrix(N, M), params};
  Vector scores(M);
  for (Eigen::Index n = 0; n < N; ++n) {
    if (occupants[static_cast<std::size_t>(n)].empty()) {
      throw Error("location " + std::to_string(n) + " has empty occupancy");
    }
    const auto location = profile_location(occupants[static_cast<std::size_t>(n)], params);
    for (Eigen::Index m = 0; m < M; ++m) {
      const auto mi = static_cast<std::size_t>(m);
      scores[m] = profile_score(location, collection[mi], rho[mi], params);
      if (!std::isfinite(scores[m])) {
        throw Error("non-finite score at (" + std::to_string(n) + ", " + std::to_string(m) + ")");
      }
    }
    cost.entries.row(n) = softmax(scores).transpose();
  }
  return cost;
}

void write_cost_csv(std::ostream& out, const CostMatrix& cost,
                    const std::vector<std::string>& location_ids,
                    const std::vector<std::string>& object_ids) {
  write_matrix_csv(out, cost.entries, location_ids, object_ids);
}

}  // namespace opart
