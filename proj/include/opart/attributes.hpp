#pragma once

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace opart {

/// One categorical dimension of the attribute space (e.g. "gender").
struct Dimension {
  std::string name;
  std::vector<std::string> categories;

  bool operator==(const Dimension&) const = default;
};

/// Point in the categorical space: one category index per dimension.
struct AttributeVector {
  std::vector<int> values;

  AttributeVector() = default;
  AttributeVector(std::initializer_list<int> v) : values(v) {}
  explicit AttributeVector(std::vector<int> v) : values(std::move(v)) {}

  std::size_t size() const noexcept { return values.size(); }
  int operator[](std::size_t d) const { return values[d]; }

  auto operator<=>(const AttributeVector&) const = default;
  bool operator==(const AttributeVector&) const = default;
};

/// The product space X_1 x ... x X_D shared by users and objects.
class AttributeSchema {
 public:
  AttributeSchema() = default;
  /// Throws opart::Error when a dimension is empty or labels repeat.
  explicit AttributeSchema(std::vector<Dimension> dimensions);

  std::size_t size() const noexcept { return dims_.size(); }
  const Dimension& dimension(std::size_t d) const { return dims_.at(d); }
  const std::vector<Dimension>& dimensions() const noexcept { return dims_; }
  std::size_t cardinality(std::size_t d) const { return dims_.at(d).categories.size(); }

  std::optional<std::size_t> dimension_index(std::string_view name) const;
  std::optional<int> category_index(std::size_t d, std::string_view label) const;

  bool contains(const AttributeVector& v) const noexcept;
  void validate(const AttributeVector& v) const;

  bool operator==(const AttributeSchema&) const = default;

 private:
  std::vector<Dimension> dims_;
};

/// Per-dimension proportional shares of a vector's categories within a
/// reference population.
struct QuantizedVector {
  std::vector<double> proportions;
  std::string context;
};

/// Per-dimension category histogram of a multiset of attribute vectors.
class CategoryCounts {
 public:
  /// Throws "empty occupancy" for an empty population and on ragged input.
  explicit CategoryCounts(std::span<const AttributeVector> population);

  std::size_t total() const noexcept { return total_; }
  std::size_t dimensions() const noexcept { return counts_.size(); }
  std::size_t count(std::size_t d, int category) const;
  double share(std::size_t d, int category) const {
    return static_cast<double>(count(d, category)) / static_cast<double>(total_);
  }
  /// Most frequent category per dimension, ties to the lowest index.
  AttributeVector mode() const;

 private:
  std::vector<std::vector<std::size_t>> counts_;
  std::size_t total_ = 0;
};

QuantizedVector quantize(const AttributeVector& v, const CategoryCounts& reference,
                         std::string context = {});

/// Q_n(s): shares of the user's categories among the occupants of a location.
QuantizedVector quantize_user(const AttributeVector& user,
                              std::span<const AttributeVector> occupants);

/// Q_A(a): shares of the object's categories within the whole collection.
QuantizedVector quantize_object(const AttributeVector& object,
                                std::span<const AttributeVector> collection);

struct Rarity {
  double value = 0.0;
  /// Set when some category of the object does not occur in the collection.
  bool out_of_collection = false;
};

/// Product of the object's per-dimension collection shares.
Rarity rarity_rho(const AttributeVector& object, const CategoryCounts& collection);
Rarity rarity_rho(const AttributeVector& object,
                  std::span<const AttributeVector> collection);

/// Occupancy-weighted distance: Euclidean norm over dimensions where x and y
/// differ of the difference of their occupancy shares.
double weighted_distance(const AttributeVector& x, const AttributeVector& y,
                         const CategoryCounts& occupants);
double weighted_distance(const AttributeVector& x, const AttributeVector& y,
                         std::span<const AttributeVector> occupants);

/// sqrt(number of mismatched dimensions).
double raw_distance(const AttributeVector& x, const AttributeVector& y);

AttributeVector location_mode(std::span<const AttributeVector> occupants);

}  // namespace opart
