#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "opart/attributes.hpp"
#include "opart/matrix.hpp"

namespace opart {

struct CostParams {
  /// Signed; -alpha multiplies the occupant outlier distance.
  double alpha = -1.0;
  double beta = 100.0;
  /// Lower bound for the object distance and for the rarity in denominators.
  double epsilon_floor = 1e-6;
};

/// N x M row-stochastic cost matrix.
struct CostMatrix {
  Matrix entries;
  CostParams params;

  Eigen::Index rows() const { return entries.rows(); }
  Eigen::Index cols() const { return entries.cols(); }
};

/// Exponent of the cost for one (location, object) pair:
///
///   sum_{s in occupants} -alpha * |s - mode|_n / (beta * rho(object) * |s - object|)
///
/// where both rho and |s - object| are floored at epsilon_floor.
double score(std::span<const AttributeVector> occupants, const AttributeVector& object,
             std::span<const AttributeVector> collection, const CostParams& params);

/// Row-wise softmax of the scores, one row per location.
CostMatrix build_cost_matrix(const std::vector<std::vector<AttributeVector>>& occupants,
                             std::span<const AttributeVector> collection,
                             const CostParams& params);

/// Numerically safe softmax of a single row of scores.
Vector softmax(const Vector& scores);

/// Audit dump: header "location_id,<object ids>", one row per location.
void write_cost_csv(std::ostream& out, const CostMatrix& cost,
                    const std::vector<std::string>& location_ids,
                    const std::vector<std::string>& object_ids);

}  // namespace opart
