#include "opart/fairness.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "opart/error.hpp"

namespace opart {

namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

void check_assignment_shape(const Matrix& P, const OccupancyAssignment& occupancy,
                            const std::vector<AttributeVector>& collection) {
  if (static_cast<std::size_t>(P.rows()) != occupancy.members.size() ||
      static_cast<std::size_t>(P.cols()) != collection.size()) {
    throw Error("assignment shape does not match locations x objects");
  }
}

// exposure(n, c) = sum_m P(n, m) [object m has category c in dimension d]
Matrix category_exposure(const Matrix& P, const std::vector<AttributeVector>& collection,
                         std::size_t d, std::size_t categories) {
  Matrix out = Matrix::Zero(P.rows(), static_cast<Eigen::Index>(categories));
  for (std::size_t m = 0; m < collection.size(); ++m) {
    const auto c = static_cast<Eigen::Index>(collection[m][d]);
    out.col(c) += P.col(static_cast<Eigen::Index>(m));
  }
  return out;
}

}  // namespace

ResolvedGroup::ResolvedGroup(const GroupSpec& spec, const AttributeSchema& schema) {
  const auto d = schema.dimension_index(spec.dimension);
  if (!d) throw Error("unknown group dimension '" + spec.dimension + "'");
  dim_ = *d;
  const auto& cats = schema.dimension(dim_).categories;
  member_.assign(cats.size(), false);
  for (const auto& label : spec.disadvantaged) {
    const auto c = schema.category_index(dim_, label);
    if (!c) throw Error("unknown category '" + label + "' in '" + spec.dimension + "'");
    member_[static_cast<std::size_t>(*c)] = true;
  }
  const auto members = std::count(member_.begin(), member_.end(), true);
  if (members == 0 || static_cast<std::size_t>(members) == cats.size()) {
    throw Error("group for '" + spec.dimension +
                "' must be a nonempty strict subset of its categories");
  }
  std::vector<std::string> in, out;
  for (std::size_t c = 0; c < cats.size(); ++c) (member_[c] ? in : out).push_back(cats[c]);
  complement_label_ = spec.complement_label.empty() ? join(out, "+") : spec.complement_label;
  if (!spec.label.empty()) {
    label_ = spec.label;
  } else if (out.size() == 1) {
    label_ = "non-" + out.front();
  } else {
    label_ = join(in, "+");
  }
}

GroupSpec ResolvedGroup::complement_spec(const AttributeSchema& schema) const {
  GroupSpec spec;
  spec.dimension = schema.dimension(dim_).name;
  for (std::size_t c = 0; c < member_.size(); ++c) {
    if (!member_[c]) spec.disadvantaged.insert(schema.dimension(dim_).categories[c]);
  }
  spec.label = complement_label_;
  spec.complement_label = label_;
  return spec;
}

std::vector<GroupSpec> default_groups(const AttributeSchema& schema,
                                      const std::vector<AttributeVector>& collection) {
  std::vector<GroupSpec> groups;
  for (std::size_t d = 0; d < schema.size(); ++d) {
    const auto& cats = schema.dimension(d).categories;
    if (cats.size() < 2) continue;
    std::vector<std::size_t> counts(cats.size(), 0);
    for (const auto& a : collection) ++counts.at(static_cast<std::size_t>(a[d]));
    const auto majority =
        static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    GroupSpec g;
    g.dimension = schema.dimension(d).name;
    for (std::size_t c = 0; c < cats.size(); ++c) {
      if (c != majority) g.disadvantaged.insert(cats[c]);
    }
    groups.push_back(std::move(g));
  }
  return groups;
}

double representative_exposure(std::size_t user, const OccupancyAssignment& occupancy,
                               const Matrix& P, const std::vector<AttributeVector>& collection,
                               const std::vector<User>& users, const ResolvedGroup& group) {
  check_assignment_shape(P, occupancy, collection);
  const int category = users.at(user).attributes[group.dimension()];
  double r = 0.0;
  for (std::size_t n = 0; n < occupancy.members.size(); ++n) {
    const auto& members = occupancy.members[n];
    if (!std::binary_search(members.begin(), members.end(), user)) continue;
    for (std::size_t m = 0; m < collection.size(); ++m) {
      if (collection[m][group.dimension()] == category) {
        r += P(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
      }
    }
  }
  return r;
}

GroupExpectations group_expectations(const std::vector<User>& users,
                                     const OccupancyAssignment& occupancy, const Matrix& P,
                                     const std::vector<AttributeVector>& collection,
                                     const ResolvedGroup& group) {
  check_assignment_shape(P, occupancy, collection);
  const std::size_t d = group.dimension();
  std::size_t categories = 0;
  for (const auto& a : collection) categories = std::max(categories, static_cast<std::size_t>(a[d]) + 1);
  for (const auto& u : users) categories = std::max(categories, static_cast<std::size_t>(u.attributes[d]) + 1);
  const Matrix exposure = category_exposure(P, collection, d, categories);

  std::vector<double> r(users.size(), 0.0);
  for (std::size_t n = 0; n < occupancy.members.size(); ++n) {
    for (auto i : occupancy.members[n]) {
      r.at(i) += exposure(static_cast<Eigen::Index>(n), users[i].attributes[d]);
    }
  }
  double in_sum = 0.0, out_sum = 0.0;
  std::size_t in_count = 0, out_count = 0;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (group.contains(users[i].attributes)) {
      in_sum += r[i];
      ++in_count;
    } else {
      out_sum += r[i];
      ++out_count;
    }
  }
  if (in_count == 0 || out_count == 0) throw Error("empty group");
  return {in_sum / static_cast<double>(in_count), out_sum / static_cast<double>(out_count)};
}

double group_expectation(const std::vector<User>& users, const OccupancyAssignment& occupancy,
                         const Matrix& P, const std::vector<AttributeVector>& collection,
                         const ResolvedGroup& group) {
  check_assignment_shape(P, occupancy, collection);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (!group.contains(users[i].attributes)) continue;
    sum += representative_exposure(i, occupancy, P, collection, users, group);
    ++count;
  }
  if (count == 0) throw Error("empty group");
  return sum / static_cast<double>(count);
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw Error("mean_std of no values");
  MeanStd out;
  for (double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return out;
}

std::vector<FairnessReport> fairness_table(const std::vector<NamedAssignment>& assignments,
                                           const std::vector<OccupancyAssignment>& rounds,
                                           const std::vector<GroupSpec>& groups,
                                           const AttributeSchema& schema,
                                           const std::vector<User>& users,
                                           const std::vector<AttributeVector>& collection) {
  if (rounds.empty()) throw Error("fairness_table needs at least one round");
  std::vector<ResolvedGroup> resolved;
  for (const auto& g : groups) resolved.emplace_back(g, schema);

  std::vector<FairnessReport> reports;
  for (const auto& a : assignments) {
    for (const auto& g : resolved) {
      FairnessReport rep;
      rep.assignment = a.name;
      rep.group = g.label();
      rep.complement = g.complement_label();
      std::vector<double> in, out;
      for (const auto& round : rounds) {
        const auto e = group_expectations(users, round, a.P, collection, g);
        in.push_back(e.disadvantaged);
        out.push_back(e.advantaged);
        rep.unfairness_per_round.push_back(e.disadvantaged - e.advantaged);
      }
      rep.disadvantaged = mean_std(in);
      rep.advantaged = mean_std(out);
      rep.mean_unfairness = mean_std(rep.unfairness_per_round).mean;
      reports.push_back(std::move(rep));
    }
  }
  return reports;
}

std::string fairness_to_json(const std::vector<FairnessReport>& reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    arr.push_back({{"assignment", r.assignment},
                   {"group", r.group},
                   {"complement", r.complement},
                   {"disadvantaged", {{"mean", r.disadvantaged.mean}, {"std", r.disadvantaged.stddev}}},
                   {"advantaged", {{"mean", r.advantaged.mean}, {"std", r.advantaged.stddev}}},
                   {"U_per_round", r.unfairness_per_round},
                   {"U_mean", r.mean_unfairness}});
  }
  return nlohmann::ordered_json{{"reports", arr}}.dump(2);
}

std::string fairness_to_text(const std::vector<FairnessReport>& reports) {
  std::vector<std::string> row_names;
  std::vector<std::pair<std::string, std::string>> columns;
  std::map<std::pair<std::string, std::string>, const FairnessReport*> cell;
  for (const auto& r : reports) {
    if (std::find(row_names.begin(), row_names.end(), r.assignment) == row_names.end()) {
      row_names.push_back(r.assignment);
    }
    const std::pair<std::string, std::string> col{r.complement, r.group};
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    cell[{r.assignment, r.group}] = &r;
  }
  auto fmt = [](const MeanStd& v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v.mean << " +- " << v.stddev;
    return s.str();
  };

  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{""};
  for (const auto& [comp, group] : columns) {
    header.push_back(comp);
    header.push_back(group);
  }
  grid.push_back(header);
  for (const auto& name : row_names) {
    std::vector<std::string> line{name};
    for (const auto& [comp, group] : columns) {
      const auto it = cell.find({name, group});
      line.push_back(it == cell.end() ? "-" : fmt(it->second->advantaged));
      line.push_back(it == cell.end() ? "-" : fmt(it->second->disadvantaged));
    }
    grid.push_back(std::move(line));
  }
  std::vector<std::size_t> width(header.size(), 0);
  for (const auto& line : grid) {
    for (std::size_t c = 0; c < line.size(); ++c) width[c] = std::max(width[c], line[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    for (std::size_t c = 0; c < grid[r].size(); ++c) {
      out << (c ? " | " : "") << std::left << std::setw(static_cast<int>(width[c])) << grid[r][c];
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w + 3;
      out << std::string(total - 3, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace opart
