#pragma once

#include <set>
#include <string>
#include <vector>

#include "opart/attributes.hpp"
#include "opart/matrix.hpp"
#include "opart/population.hpp"

namespace opart {

/// Disadvantaged group G: users whose category in `dimension` lies in
/// `disadvantaged`. The complement is the advantaged group.
struct GroupSpec {
  std::string dimension;
  std::set<std::string> disadvantaged;
  /// Display names for G and not-G; generated when empty.
  std::string label;
  std::string complement_label;
};

/// GroupSpec bound to a schema: category membership by index.
class ResolvedGroup {
 public:
  ResolvedGroup(const GroupSpec& spec, const AttributeSchema& schema);

  std::size_t dimension() const noexcept { return dim_; }
  bool contains(const AttributeVector& v) const { return member_.at(static_cast<std::size_t>(v[dim_])); }
  const std::string& label() const noexcept { return label_; }
  const std::string& complement_label() const noexcept { return complement_label_; }
  /// The same dimension with the complementary category set.
  GroupSpec complement_spec(const AttributeSchema& schema) const;

 private:
  std::size_t dim_ = 0;
  std::vector<bool> member_;
  std::string label_;
  std::string complement_label_;
};

/// Default groups: per dimension, every category except the one most
/// frequent in the collection (e.g. "non-man" when most artists are men).
std::vector<GroupSpec> default_groups(const AttributeSchema& schema,
                                      const std::vector<AttributeVector>& collection);

/// r(s): sum over the locations s occupies of the assignment mass on objects
/// sharing the user's category in the group dimension.
double representative_exposure(std::size_t user, const OccupancyAssignment& occupancy,
                               const Matrix& P, const std::vector<AttributeVector>& collection,
                               const std::vector<User>& users, const ResolvedGroup& group);

struct GroupExpectations {
  double disadvantaged = 0.0;  // E_G[y]
  double advantaged = 0.0;     // E_notG[y]
  double unfairness() const { return disadvantaged - advantaged; }
};

/// E_G[y] over users in G. Throws "empty group" when G has no users.
double group_expectation(const std::vector<User>& users, const OccupancyAssignment& occupancy,
                         const Matrix& P, const std::vector<AttributeVector>& collection,
                         const ResolvedGroup& group);

/// Both E_G[y] and E_notG[y] in one pass.
GroupExpectations group_expectations(const std::vector<User>& users,
                                     const OccupancyAssignment& occupancy, const Matrix& P,
                                     const std::vector<AttributeVector>& collection,
                                     const ResolvedGroup& group);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Sample mean and standard deviation (n - 1); a single value has stddev 0.
MeanStd mean_std(const std::vector<double>& values);

struct FairnessReport {
  std::string assignment;
  std::string group;
  std::string complement;
  MeanStd disadvantaged;
  MeanStd advantaged;
  std::vector<double> unfairness_per_round;
  double mean_unfairness = 0.0;
};

struct NamedAssignment {
  std::string name;
  Matrix P;
};

/// One report per (assignment, group), assignments outermost.
std::vector<FairnessReport> fairness_table(const std::vector<NamedAssignment>& assignments,
                                           const std::vector<OccupancyAssignment>& rounds,
                                           const std::vector<GroupSpec>& groups,
                                           const AttributeSchema& schema,
                                           const std::vector<User>& users,
                                           const std::vector<AttributeVector>& collection);

std::string fairness_to_json(const std::vector<FairnessReport>& reports);
/// Aligned text table: one row per assignment, "mean +- std" for not-G and G
/// of every group.
std::string fairness_to_text(const std::vector<FairnessReport>& reports);

}  // namespace opart
