#include "opart/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "opart/error.hpp"

namespace opart {

namespace {

void require_same_length(const AttributeVector& x, const AttributeVector& y) {
  if (x.size() != y.size()) {
    throw Error("schema mismatch: vectors of length " + std::to_string(x.size()) +
                " and " + std::to_string(y.size()));
  }
}

}  // namespace

AttributeSchema::AttributeSchema(std::vector<Dimension> dimensions)
    : dims_(std::move(dimensions)) {
  if (dims_.empty()) throw Error("attribute schema needs at least one dimension");
  std::set<std::string> names;
  for (const auto& dim : dims_) {
    if (!names.insert(dim.name).second) {
      throw Error("duplicate dimension name '" + dim.name + "'");
    }
    if (dim.categories.empty()) {
      throw Error("dimension '" + dim.name + "' has no categories");
    }
    std::set<std::string> labels(dim.categories.begin(), dim.categories.end());
    if (labels.size() != dim.categories.size()) {
      throw Error("dimension '" + dim.name + "' repeats a category label");
    }
  }
}

std::optional<std::size_t> AttributeSchema::dimension_index(std::string_view name) const {
  for (std::size_t d = 0; d < dims_.size(); ++d) {
    if (dims_[d].name == name) return d;
  }
  return std::nullopt;
}

std::optional<int> AttributeSchema::category_index(std::size_t d,
                                                   std::string_view label) const {
  const auto& cats = dims_.at(d).categories;
  auto it = std::find(cats.begin(), cats.end(), label);
  if (it == cats.end()) return std::nullopt;
  return static_cast<int>(it - cats.begin());
}

bool AttributeSchema::contains(const AttributeVector& v) const noexcept {
  if (v.size() != dims_.size()) return false;
  for (std::size_t d = 0; d < v.size(); ++d) {
    if (v[d] < 0 || static_cast<std::size_t>(v[d]) >= dims_[d].categories.size()) {
      return false;
    }
  }
  return true;
}

void AttributeSchema::validate(const AttributeVector& v) const {
  if (v.size() != dims_.size()) {
    throw Error("schema mismatch: expected " + std::to_string(dims_.size()) +
                " dimensions, got " + std::to_string(v.size()));
  }
  for (std::size_t d = 0; d < v.size(); ++d) {
    if (v[d] < 0 || static_cast<std::size_t>(v[d]) >= dims_[d].categories.size()) {
      throw Error("category index " + std::to_string(v[d]) + " out of range for '" +
                  dims_[d].name + "'");
    }
  }
}

CategoryCounts::CategoryCounts(std::span<const AttributeVector> population)
    : total_(population.size()) {
  if (population.empty()) throw Error("empty occupancy");
  const std::size_t dims = population.front().size();
  counts_.resize(dims);
  for (const auto& v : population) {
    if (v.size() != dims) throw Error("schema mismatch within population");
    for (std::size_t d = 0; d < dims; ++d) {
      if (v[d] < 0) throw Error("negative category index");
      auto& row = counts_[d];
      const auto c = static_cast<std::size_t>(v[d]);
      if (row.size() <= c) row.resize(c + 1, 0);
      ++row[c];
    }
  }
}

std::size_t CategoryCounts::count(std::size_t d, int category) const {
  const auto& row = counts_.at(d);
  if (category < 0 || static_cast<std::size_t>(category) >= row.size()) return 0;
  return row[static_cast<std::size_t>(category)];
}

AttributeVector CategoryCounts::mode() const {
  std::vector<int> out(counts_.size());
  for (std::size_t d = 0; d < counts_.size(); ++d) {
    // max_element returns the first maximum, which is the lowest index.
    const auto& row = counts_[d];
    out[d] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return AttributeVector(std::move(out));
}

QuantizedVector quantize(const AttributeVector& v, const CategoryCounts& reference,
                         std::string context) {
  if (v.size() != reference.dimensions()) {
    throw Error("schema mismatch: vector has " + std::to_string(v.size()) +
                " dimensions, population has " + std::to_string(reference.dimensions()));
  }
  QuantizedVector q{std::vector<double>(v.size()), std::move(context)};
  for (std::size_t d = 0; d < v.size(); ++d) q.proportions[d] = reference.share(d, v[d]);
  return q;
}

QuantizedVector quantize_user(const AttributeVector& user,
                              std::span<const AttributeVector> occupants) {
  return quantize(user, CategoryCounts(occupants), "occupancy");
}

QuantizedVector quantize_object(const AttributeVector& object,
                                std::span<const AttributeVector> collection) {
  if (collection.empty()) throw Error("empty collection");
  return quantize(object, CategoryCounts(collection), "collection");
}

Rarity rarity_rho(const AttributeVector& object, const CategoryCounts& collection) {
  const auto q = quantize(object, collection);
  Rarity r{1.0, false};
  for (double p : q.proportions) {
    r.value *= p;
    if (p == 0.0) r.out_of_collection = true;
  }
  return r;
}

Rarity rarity_rho(const AttributeVector& object,
                  std::span<const AttributeVector> collection) {
  if (collection.empty()) throw Error("empty collection");
  return rarity_rho(object, CategoryCounts(collection));
}

double weighted_distance(const AttributeVector& x, const AttributeVector& y,
                         const CategoryCounts& occupants) {
  require_same_length(x, y);
  if (x.size() != occupants.dimensions()) throw Error("schema mismatch with occupancy");
  double sum = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (x[d] == y[d]) continue;
    const double diff = occupants.share(d, x[d]) - occupants.share(d, y[d]);
    sum += diff * diff;
  }
  return std::sqrt(sum);
}

double weighted_distance(const AttributeVector& x, const AttributeVector& y,
                         std::span<const AttributeVector> occupants) {
  return weighted_distance(x, y, CategoryCounts(occupants));
}

double raw_distance(const AttributeVector& x, const AttributeVector& y) {
  require_same_length(x, y);
  std::size_t mismatches = 0;
  for (std::size_t d = 0; d < x.size(); ++d) mismatches += (x[d] != y[d]);
  return std::sqrt(static_cast<double>(mismatches));
}

AttributeVector location_mode(std::span<const AttributeVector> occupants) {
  return CategoryCounts(occupants).mode();
}

}  // namespace opart
