#include "opart/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "opart/error.hpp"
#include "opart/io_format.hpp"
#include "opart/rng.hpp"

namespace opart {

namespace fs = std::filesystem;

namespace {

std::string line_ref(const fs::path& file, std::size_t row_index) {
  // Header is line 1.
  return file.filename().string() + " row " + std::to_string(row_index + 2);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Dimension columns by schema order; records a problem for each missing one.
std::vector<int> dimension_columns(const CsvTable& table, const AttributeSchema& schema,
                                   const fs::path& file, std::vector<std::string>& problems) {
  std::vector<int> cols;
  for (const auto& dim : schema.dimensions()) {
    const int c = table.column(dim.name);
    if (c < 0) problems.push_back(file.filename().string() + ": missing column '" + dim.name + "'");
    cols.push_back(c);
  }
  return cols;
}

std::optional<AttributeVector> parse_attributes(const std::vector<std::string>& row,
                                                const std::vector<int>& cols,
                                                const AttributeSchema& schema,
                                                const std::string& where,
                                                std::vector<std::string>& problems) {
  std::vector<int> values;
  bool ok = true;
  for (std::size_t d = 0; d < cols.size(); ++d) {
    if (cols[d] < 0) return std::nullopt;
    const auto& label = row.at(static_cast<std::size_t>(cols[d]));
    const auto idx = schema.category_index(d, label);
    if (!idx) {
      problems.push_back(where + ": unknown category '" + label + "' for '" +
                         schema.dimension(d).name + "'");
      ok = false;
      continue;
    }
    values.push_back(*idx);
  }
  if (!ok) return std::nullopt;
  return AttributeVector(std::move(values));
}

bool row_width_ok(const std::vector<std::string>& row, const CsvTable& table,
                  const std::string& where, std::vector<std::string>& problems) {
  if (row.size() == table.header().size()) return true;
  problems.push_back(where + ": expected " + std::to_string(table.header().size()) +
                     " fields, found " + std::to_string(row.size()));
  return false;
}

template <typename F>
auto guarded(const std::string& where, std::vector<std::string>& problems, F&& parse)
    -> std::optional<decltype(parse())> {
  try {
    return parse();
  } catch (const Error& e) {
    problems.push_back(where + ": " + e.what());
    return std::nullopt;
  }
}

std::vector<std::string> attribute_labels(const AttributeSchema& schema, const AttributeVector& v) {
  std::vector<std::string> out;
  for (std::size_t d = 0; d < v.size(); ++d) {
    out.push_back(schema.dimension(d).categories.at(static_cast<std::size_t>(v[d])));
  }
  return out;
}

int draw_category(Rng& rng, int cardinality, double skew) {
  if (cardinality <= 1) return 0;
  const double p0 = std::max(skew, 1.0 / cardinality);
  if (rng.uniform() < p0) return 0;
  return 1 + static_cast<int>(rng.index(static_cast<std::uint64_t>(cardinality - 1)));
}

}  // namespace

Vector Dataset::location_capacities() const {
  Vector h(static_cast<Eigen::Index>(locations.size()));
  for (std::size_t n = 0; n < locations.size(); ++n) {
    h[static_cast<Eigen::Index>(n)] = locations[n].capacity;
  }
  return h;
}

Vector Dataset::object_capacities() const {
  Vector k(static_cast<Eigen::Index>(objects.size()));
  for (std::size_t m = 0; m < objects.size(); ++m) {
    k[static_cast<Eigen::Index>(m)] = objects[m].capacity;
  }
  return k;
}

std::vector<AttributeVector> Dataset::collection() const {
  std::vector<AttributeVector> out;
  out.reserve(objects.size());
  for (const auto& o : objects) out.push_back(o.attributes);
  return out;
}

std::vector<std::string> Dataset::object_ids() const {
  std::vector<std::string> out;
  for (const auto& o : objects) out.push_back(o.id);
  return out;
}

std::vector<std::string> Dataset::location_ids() const {
  std::vector<std::string> out;
  for (const auto& l : locations) out.push_back(l.id);
  return out;
}

void Dataset::validate() {
  std::vector<std::string> problems;
  auto check_unique = [&](const std::vector<std::string>& ids, const char* what) {
    std::set<std::string> seen;
    for (const auto& id : ids) {
      if (id.empty()) problems.push_back(std::string(what) + ": empty id");
      else if (!seen.insert(id).second) problems.push_back(std::string(what) + ": duplicate id '" + id + "'");
    }
  };
  check_unique(object_ids(), "collection");
  check_unique(location_ids(), "locations");
  std::vector<std::string> user_ids;
  for (const auto& u : users) user_ids.push_back(u.id);
  check_unique(user_ids, "users");

  if (objects.empty()) problems.push_back("collection: no objects");
  if (locations.empty()) problems.push_back("locations: no locations");
  for (const auto& o : objects) {
    if (!schema.contains(o.attributes)) problems.push_back("object '" + o.id + "': attributes outside schema");
    if (o.capacity < 1) problems.push_back("object '" + o.id + "': capacity must be at least 1");
  }
  for (const auto& u : users) {
    if (!schema.contains(u.attributes)) problems.push_back("user '" + u.id + "': attributes outside schema");
  }
  for (const auto& l : locations) {
    if (l.capacity < 1) problems.push_back("location '" + l.id + "': capacity must be at least 1");
    if (l.beds < 0) problems.push_back("location '" + l.id + "': negative beds");
    if (!l.has_flags()) problems.push_back("location '" + l.id + "': no space flags");
  }
  if (current) {
    if (static_cast<std::size_t>(current->rows()) != locations.size() ||
        static_cast<std::size_t>(current->cols()) != objects.size()) {
      problems.push_back("current assignment shape does not match locations x objects");
    } else if (problems.empty()) {
      if (!current->allFinite() || current->minCoeff() < -1e-9) {
        problems.push_back("current assignment has negative or non-finite entries");
      }
      const Vector sums = current->rowwise().sum();
      const Vector h = location_capacities();
      for (Eigen::Index n = 0; n < h.size(); ++n) {
        if (std::abs(sums[n] - h[n]) > 1e-6) {
          problems.push_back("current assignment row '" + locations[static_cast<std::size_t>(n)].id +
                             "' sums to " + format_double(sums[n]) + ", capacity is " +
                             format_double(h[n]));
        }
      }
    }
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));

  warnings.erase(std::remove_if(warnings.begin(), warnings.end(),
                                [](const std::string& w) { return w.rfind("capacity:", 0) == 0; }),
                 warnings.end());
  const double k_total = object_capacities().sum();
  const double h_total = location_capacities().sum();
  if (k_total < h_total) {
    warnings.push_back("capacity: total object capacity " + format_double(k_total) +
                       " is below total wall capacity " + format_double(h_total));
  }
}

DatasetPaths DatasetPaths::in_directory(const fs::path& dir) {
  return {dir / "schema.json", dir / "collection.csv", dir / "locations.csv", dir / "users.csv",
          dir / "assignment.csv"};
}

AttributeSchema load_schema(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    std::vector<Dimension> dims;
    for (const auto& d : j.at("dimensions")) {
      dims.push_back({d.at("name").get<std::string>(), d.at("categories").get<std::vector<std::string>>()});
    }
    return AttributeSchema(std::move(dims));
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.filename().string() + ": " + e.what());
  }
}

std::string schema_to_json(const AttributeSchema& schema) {
  auto dims = nlohmann::ordered_json::array();
  for (const auto& d : schema.dimensions()) {
    dims.push_back({{"name", d.name}, {"categories", d.categories}});
  }
  return nlohmann::ordered_json{{"dimensions", dims}}.dump(2);
}

std::string format_location_flags(const Location& location) {
  std::vector<std::string> parts;
  for (const auto& s : location.academic_schools) parts.push_back("academic:" + s);
  if (location.is_public) parts.emplace_back("public");
  if (location.administrative) parts.emplace_back("administrative");
  if (location.residential) parts.emplace_back("residential");
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? ";" : "") + parts[i];
  return out;
}

void parse_location_flags(const std::string& text, Location& location) {
  for (const auto& flag : split(text, ';')) {
    if (flag.rfind("academic:", 0) == 0 && flag.size() > 9) {
      location.academic_schools.push_back(flag.substr(9));
    } else if (flag == "public") {
      location.is_public = true;
    } else if (flag == "administrative") {
      location.administrative = true;
    } else if (flag == "residential") {
      location.residential = true;
    } else {
      throw Error("unknown flag '" + flag + "'");
    }
  }
}

Dataset load_dataset(const DatasetPaths& paths) {
  Dataset ds;
  ds.schema = load_schema(paths.schema);
  std::vector<std::string> problems;

  const auto collection = CsvTable::read_file(paths.collection.string());
  {
    const int id_col = collection.column("id");
    const int k_col = collection.column("k");
    if (id_col < 0) problems.push_back("collection.csv: missing column 'id'");
    const auto dims = dimension_columns(collection, ds.schema, paths.collection, problems);
    for (std::size_t r = 0; id_col >= 0 && r < collection.rows().size(); ++r) {
      const auto& row = collection.rows()[r];
      const auto where = line_ref(paths.collection, r);
      if (!row_width_ok(row, collection, where, problems)) continue;
      ArtObject obj;
      obj.id = row[static_cast<std::size_t>(id_col)];
      if (k_col >= 0 && !row[static_cast<std::size_t>(k_col)].empty()) {
        const auto k = guarded(where, problems, [&] { return parse_integer(row[static_cast<std::size_t>(k_col)]); });
        if (!k) continue;
        if (*k < 1) {
          problems.push_back(where + ": capacity k must be at least 1");
          continue;
        }
        obj.capacity = static_cast<int>(*k);
      }
      auto attrs = parse_attributes(row, dims, ds.schema, where, problems);
      if (!attrs) continue;
      obj.attributes = std::move(*attrs);
      ds.objects.push_back(std::move(obj));
    }
  }

  const auto locations = CsvTable::read_file(paths.locations.string());
  {
    const char* required[] = {"id", "name", "capacity", "flags", "beds", "lat", "lon"};
    bool ok = true;
    for (const char* c : required) {
      if (locations.column(c) < 0) {
        problems.push_back(std::string("locations.csv: missing column '") + c + "'");
        ok = false;
      }
    }
    for (std::size_t r = 0; ok && r < locations.rows().size(); ++r) {
      const auto& row = locations.rows()[r];
      const auto where = line_ref(paths.locations, r);
      if (!row_width_ok(row, locations, where, problems)) continue;
      auto field = [&](const char* name) -> const std::string& {
        return row[static_cast<std::size_t>(locations.column(name))];
      };
      const auto loc = guarded(where, problems, [&] {
        Location l;
        l.id = field("id");
        l.name = field("name");
        l.capacity = static_cast<int>(parse_integer(field("capacity")));
        parse_location_flags(field("flags"), l);
        l.beds = field("beds").empty() ? 0 : static_cast<int>(parse_integer(field("beds")));
        if (!field("lat").empty() || !field("lon").empty()) {
          l.gps = GeoPoint{parse_double(field("lat")), parse_double(field("lon"))};
        }
        return l;
      });
      if (!loc) continue;
      if (loc->capacity < 1) {
        problems.push_back(where + ": capacity must be at least 1");
        continue;
      }
      if (loc->beds < 0) {
        problems.push_back(where + ": beds must be nonnegative");
        continue;
      }
      ds.locations.push_back(*loc);
    }
  }

  const auto users = CsvTable::read_file(paths.users.string());
  {
    const int id_col = users.column("id");
    const int school_col = users.column("school");
    if (id_col < 0) problems.push_back("users.csv: missing column 'id'");
    if (school_col < 0) problems.push_back("users.csv: missing column 'school'");
    const auto dims = dimension_columns(users, ds.schema, paths.users, problems);
    for (std::size_t r = 0; id_col >= 0 && school_col >= 0 && r < users.rows().size(); ++r) {
      const auto& row = users.rows()[r];
      const auto where = line_ref(paths.users, r);
      if (!row_width_ok(row, users, where, problems)) continue;
      auto attrs = parse_attributes(row, dims, ds.schema, where, problems);
      if (!attrs) continue;
      ds.users.push_back({row[static_cast<std::size_t>(id_col)], std::move(*attrs),
                          row[static_cast<std::size_t>(school_col)]});
    }
  }

  if (!problems.empty()) throw ValidationError(std::move(problems));
  if (!paths.assignment.empty() && fs::exists(paths.assignment)) {
    ds.current = load_assignment(paths.assignment, ds);
  }
  ds.validate();
  return ds;
}

Dataset load_dataset(const fs::path& directory) {
  return load_dataset(DatasetPaths::in_directory(directory));
}

Matrix load_assignment(const fs::path& path, const Dataset& dataset) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  const auto labeled = read_matrix_csv(in);
  std::map<std::string, Eigen::Index> row_of, col_of;
  for (std::size_t n = 0; n < dataset.locations.size(); ++n) {
    row_of[dataset.locations[n].id] = static_cast<Eigen::Index>(n);
  }
  for (std::size_t m = 0; m < dataset.objects.size(); ++m) {
    col_of[dataset.objects[m].id] = static_cast<Eigen::Index>(m);
  }
  std::vector<std::string> problems;
  std::vector<Eigen::Index> col_map;
  for (const auto& id : labeled.column_ids) {
    const auto it = col_of.find(id);
    if (it == col_of.end()) problems.push_back(path.filename().string() + ": unknown object '" + id + "'");
    col_map.push_back(it == col_of.end() ? -1 : it->second);
  }
  Matrix P = Matrix::Zero(static_cast<Eigen::Index>(dataset.locations.size()),
                          static_cast<Eigen::Index>(dataset.objects.size()));
  std::set<Eigen::Index> seen_rows;
  for (std::size_t r = 0; r < labeled.row_ids.size(); ++r) {
    const auto it = row_of.find(labeled.row_ids[r]);
    if (it == row_of.end()) {
      problems.push_back(line_ref(path, r) + ": unknown location '" + labeled.row_ids[r] + "'");
      continue;
    }
    seen_rows.insert(it->second);
    for (std::size_t c = 0; c < col_map.size(); ++c) {
      if (col_map[c] >= 0) {
        P(it->second, col_map[c]) = labeled.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
      }
    }
  }
  if (seen_rows.size() != dataset.locations.size()) {
    problems.push_back(path.filename().string() + ": missing rows for some locations");
  }
  if (!problems.empty()) throw ValidationError(std::move(problems));
  return P;
}

void save_assignment(const Matrix& P, const Dataset& dataset, const fs::path& path) {
  auto out = open_out(path);
  write_matrix_csv(out, P, dataset.location_ids(), dataset.object_ids());
}

void save_dataset(const Dataset& dataset, const fs::path& directory) {
  fs::create_directories(directory);
  const auto paths = DatasetPaths::in_directory(directory);
  {
    auto out = open_out(paths.schema);
    out << schema_to_json(dataset.schema) << '\n';
  }
  std::vector<std::string> dim_names;
  for (const auto& d : dataset.schema.dimensions()) dim_names.push_back(d.name);
  {
    auto out = open_out(paths.collection);
    std::vector<std::string> header{"id", "k"};
    header.insert(header.end(), dim_names.begin(), dim_names.end());
    write_csv_row(out, header);
    for (const auto& o : dataset.objects) {
      std::vector<std::string> row{o.id, std::to_string(o.capacity)};
      const auto labels = attribute_labels(dataset.schema, o.attributes);
      row.insert(row.end(), labels.begin(), labels.end());
      write_csv_row(out, row);
    }
  }
  {
    auto out = open_out(paths.locations);
    write_csv_row(out, {"id", "name", "capacity", "flags", "beds", "lat", "lon"});
    for (const auto& l : dataset.locations) {
      write_csv_row(out, {l.id, l.name, std::to_string(l.capacity), format_location_flags(l),
                          std::to_string(l.beds), l.gps ? format_double(l.gps->latitude) : "",
                          l.gps ? format_double(l.gps->longitude) : ""});
    }
  }
  {
    auto out = open_out(paths.users);
    std::vector<std::string> header{"id", "school"};
    header.insert(header.end(), dim_names.begin(), dim_names.end());
    write_csv_row(out, header);
    for (const auto& u : dataset.users) {
      std::vector<std::string> row{u.id, u.school};
      const auto labels = attribute_labels(dataset.schema, u.attributes);
      row.insert(row.end(), labels.begin(), labels.end());
      write_csv_row(out, row);
    }
  }
  if (dataset.current) {
    save_assignment(*dataset.current, dataset, paths.assignment);
  } else if (fs::exists(paths.assignment)) {
    fs::remove(paths.assignment);
  }
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.objects < 1 || spec.locations < 1 || spec.users < 1 || spec.cardinalities.empty()) {
    throw Error("synthetic sizes must be at least 1");
  }
  if (!(spec.fill > 0.0)) throw Error("synthetic fill must be positive");
  Rng rng(seed);
  Dataset ds;

  std::vector<Dimension> dims;
  for (std::size_t d = 0; d < spec.cardinalities.size(); ++d) {
    if (spec.cardinalities[d] < 1) throw Error("cardinalities must be at least 1");
    Dimension dim{"d" + std::to_string(d), {}};
    for (int c = 0; c < spec.cardinalities[d]; ++c) {
      dim.categories.push_back(dim.name + "c" + std::to_string(c));
    }
    dims.push_back(std::move(dim));
  }
  ds.schema = AttributeSchema(std::move(dims));

  auto draw_vector = [&](double skew) {
    std::vector<int> v;
    for (int card : spec.cardinalities) v.push_back(draw_category(rng, card, skew));
    return AttributeVector(std::move(v));
  };
  for (std::size_t m = 0; m < spec.objects; ++m) {
    ds.objects.push_back({"a" + std::to_string(m), draw_vector(spec.skew), 1});
  }

  const std::size_t n_schools = std::max<std::size_t>(1, spec.locations / 2);
  for (std::size_t i = 0; i < spec.users; ++i) {
    ds.users.push_back({"s" + std::to_string(i), draw_vector(spec.user_skew),
                        "school" + std::to_string(i % n_schools)});
  }

  // Wall capacities: apportion the total over random weights, each at least 1.
  const auto total_k = static_cast<double>(spec.objects);
  const auto total_h = std::max<std::size_t>(
      spec.locations, static_cast<std::size_t>(std::llround(spec.fill * total_k)));
  std::vector<double> weights(spec.locations);
  for (auto& w : weights) w = 0.5 + rng.uniform();
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  std::vector<std::size_t> caps(spec.locations, 1);
  const std::size_t spare = total_h - spec.locations;
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t given = 0;
  for (std::size_t n = 0; n < spec.locations; ++n) {
    const double exact = static_cast<double>(spare) * weights[n] / wsum;
    caps[n] += static_cast<std::size_t>(exact);
    given += static_cast<std::size_t>(exact);
    remainders.emplace_back(exact - std::floor(exact), n);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; given < spare; ++i, ++given) ++caps[remainders[i].second];

  const std::size_t halls = spec.locations / 4;
  const int beds_per_hall =
      halls ? std::max(1, static_cast<int>(spec.users / (4 * halls))) : 0;
  for (std::size_t n = 0; n < spec.locations; ++n) {
    Location l;
    l.id = "b" + std::to_string(n);
    l.name = "Building " + std::to_string(n);
    l.capacity = static_cast<int>(caps[n]);
    l.academic_schools.push_back("school" + std::to_string(n % n_schools));
    l.is_public = n % 4 == 1;
    l.administrative = n % 4 == 2;
    l.residential = n % 4 == 3;
    l.beds = l.residential ? beds_per_hall : 0;
    l.gps = GeoPoint{42.4075 + 0.01 * (rng.uniform() - 0.5), -71.1190 + 0.01 * (rng.uniform() - 0.5)};
    ds.locations.push_back(std::move(l));
  }

  // Status quo: objects with the most majority-category attributes hang first.
  std::vector<std::size_t> order(spec.objects);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(order));
  auto majority_count = [&](std::size_t m) {
    const auto& a = ds.objects[m].attributes;
    return std::count(a.values.begin(), a.values.end(), 0);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return majority_count(x) > majority_count(y);
  });
  Matrix current = Matrix::Zero(static_cast<Eigen::Index>(spec.locations),
                                static_cast<Eigen::Index>(spec.objects));
  std::size_t next = 0;
  for (std::size_t n = 0; n < spec.locations; ++n) {
    for (std::size_t slot = 0; slot < caps[n]; ++slot) {
      current(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(order[next % order.size()])) += 1.0;
      ++next;
    }
  }
  ds.current = std::move(current);
  ds.validate();
  return ds;
}

}  // namespace opart
