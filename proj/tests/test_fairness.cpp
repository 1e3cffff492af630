#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "opart/error.hpp"
#include "opart/fairness.hpp"
#include "opart/pipeline.hpp"
#include "oracles.hpp"

using namespace opart;

namespace {

constexpr int W = 0, Mn = 1;

const AttributeSchema& gender_schema() {
  static const AttributeSchema schema({{"gender", {"woman", "man"}}});
  return schema;
}

GroupSpec women() { return {"gender", {"woman"}, "", ""}; }
GroupSpec men() { return {"gender", {"man"}, "", ""}; }

std::vector<User> users_from(const std::vector<int>& categories) {
  std::vector<User> users;
  for (std::size_t i = 0; i < categories.size(); ++i) {
    users.push_back({"u" + std::to_string(i), {categories[i]}, "arts"});
  }
  return users;
}

std::vector<AttributeVector> collection_from(const std::vector<int>& categories) {
  std::vector<AttributeVector> c;
  for (int v : categories) c.push_back({v});
  return c;
}

}  // namespace

TEST_CASE("representative exposure examples") {
  const ResolvedGroup g(women(), gender_schema());
  const auto users = users_from({W, Mn, W});
  const auto collection = collection_from({W, Mn, Mn, Mn});

  SUBCASE("user in no building") {
    OccupancyAssignment occ{{{1}, {1}}, 0, {}};
    const Matrix P = Matrix::Constant(2, 4, 0.25);
    CHECK(representative_exposure(0, occ, P, collection, users, g) == 0.0);
  }
  SUBCASE("one building, one-hot row on a matching object") {
    OccupancyAssignment occ{{{0}}, 0, {}};
    Matrix P = Matrix::Zero(1, 4);
    P(0, 0) = 1.0;
    CHECK(representative_exposure(0, occ, P, collection, users, g) == 1.0);
  }
  SUBCASE("two buildings of capacity 2, uniform rows, one match") {
    OccupancyAssignment occ{{{0, 1}, {0, 2}}, 0, {}};
    const Matrix P = Matrix::Constant(2, 4, 0.5);
    CHECK(representative_exposure(0, occ, P, collection, users, g) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(representative_exposure(0, occ, P, collection, users, g) ==
          doctest::Approx(oracle::exposure(0, occ, P, collection, users, 0)).epsilon(1e-15));
    // The man in building 0 sees three matching objects at 0.5 each.
    CHECK(representative_exposure(1, occ, P, collection, users, g) == doctest::Approx(1.5).epsilon(1e-15));
  }
}

TEST_CASE("group expectations") {
  SUBCASE("identical users in identical buildings") {
    const auto users = users_from({W, W, W});
    const auto collection = collection_from({W, Mn});
    OccupancyAssignment occ{{{0, 1, 2}, {0, 1, 2}}, 0, {}};
    Matrix P(2, 2);
    P << 0.7, 0.3, 0.2, 0.8;
    const ResolvedGroup g(women(), gender_schema());
    CHECK(group_expectation(users, occ, P, collection, g) ==
          doctest::Approx(representative_exposure(1, occ, P, collection, users, g)).epsilon(1e-15));
  }
  SUBCASE("balanced symmetric instance gives U = 0") {
    const auto users = users_from({W, Mn, W, Mn});
    const auto collection = collection_from({W, Mn, W, Mn});
    OccupancyAssignment occ{{{0, 1}, {2, 3}}, 0, {}};
    const Matrix P = Matrix::Constant(2, 4, 0.5);
    const auto e = group_expectations(users, occ, P, collection, ResolvedGroup(women(), gender_schema()));
    CHECK(e.disadvantaged == e.advantaged);
    CHECK(e.unfairness() == 0.0);
  }
  SUBCASE("10 users, 3 buildings, 6 objects against the loop oracle") {
    const AttributeSchema schema({{"gender", {"woman", "man"}}, {"race", {"a", "b", "c"}}});
    std::mt19937_64 gen(17);
    std::vector<User> users;
    for (int i = 0; i < 10; ++i) {
      users.push_back({"u" + std::to_string(i),
                       {std::uniform_int_distribution<int>(0, 1)(gen), std::uniform_int_distribution<int>(0, 2)(gen)},
                       "arts"});
    }
    users[0].attributes = {0, 0};
    users[1].attributes = {1, 1};
    users[2].attributes = {1, 2};
    std::vector<AttributeVector> collection;
    for (int m = 0; m < 6; ++m) collection.push_back({m % 2, m % 3});
    OccupancyAssignment occ{{{0, 1, 2, 5}, {1, 3, 4, 6, 7}, {0, 2, 8}}, 0, {}};
    Vector h(3);
    h << 1.0, 2.0, 3.0;
    const Matrix P = oracle::random_feasible(gen, h, 6);
    for (const auto& [spec, dim, members] :
         {std::tuple{GroupSpec{"gender", {"woman"}, "", ""}, std::size_t{0}, std::vector<int>{0}},
          std::tuple{GroupSpec{"race", {"b", "c"}, "", ""}, std::size_t{1}, std::vector<int>{1, 2}}}) {
      const ResolvedGroup g(spec, schema);
      std::vector<int> others;
      for (int c = 0; c < static_cast<int>(schema.cardinality(dim)); ++c) {
        if (std::find(members.begin(), members.end(), c) == members.end()) others.push_back(c);
      }
      const auto e = group_expectations(users, occ, P, collection, g);
      CHECK(std::abs(e.disadvantaged - oracle::group_mean(members, occ, P, collection, users, dim)) < 1e-12);
      CHECK(std::abs(e.advantaged - oracle::group_mean(others, occ, P, collection, users, dim)) < 1e-12);
      CHECK(std::abs(group_expectation(users, occ, P, collection, g) - e.disadvantaged) < 1e-15);
      for (std::size_t s = 0; s < users.size(); ++s) {
        const double r = representative_exposure(s, occ, P, collection, users, g);
        CHECK(std::abs(r - oracle::exposure(s, occ, P, collection, users, dim)) < 1e-12);
        // Each building contributes at most its capacity.
        double bound = 0.0;
        for (std::size_t n = 0; n < occ.members.size(); ++n) {
          for (auto i : occ.members[n]) bound += i == s ? h[static_cast<Eigen::Index>(n)] : 0.0;
        }
        CHECK(r <= bound + 1e-12);
      }
    }
  }
  SUBCASE("empty group") {
    const auto users = users_from({Mn, Mn});
    const auto collection = collection_from({W, Mn});
    OccupancyAssignment occ{{{0, 1}}, 0, {}};
    const Matrix P = Matrix::Constant(1, 2, 0.5);
    CHECK_THROWS_WITH_AS(group_expectation(users, occ, P, collection, ResolvedGroup(women(), gender_schema())),
                         doctest::Contains("empty group"), Error);
  }
}

TEST_CASE("fairness properties") {
  std::mt19937_64 gen(23);
  const auto users = users_from({W, Mn, Mn, W, Mn, W, Mn, Mn});
  const auto collection = collection_from({W, Mn, Mn, Mn, W});
  OccupancyAssignment occ{{{0, 1, 2}, {3, 4, 5, 6}, {0, 7, 5}}, 0, {}};
  Vector h(3);
  h << 2.0, 1.0, 3.0;
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix P1 = oracle::random_feasible(gen, h, 5);
    const Matrix P2 = oracle::random_feasible(gen, h, 5);
    const ResolvedGroup g(women(), gender_schema()), ng(men(), gender_schema());
    const auto a = group_expectations(users, occ, P1, collection, g);
    const auto b = group_expectations(users, occ, P1, collection, ng);
    CHECK(a.unfairness() == doctest::Approx(-b.unfairness()).epsilon(1e-15));
    const Matrix mid = 0.5 * (P1 + P2);
    for (std::size_t s = 0; s < users.size(); ++s) {
      const double avg = 0.5 * (representative_exposure(s, occ, P1, collection, users, g) +
                                representative_exposure(s, occ, P2, collection, users, g));
      CHECK(std::abs(representative_exposure(s, occ, mid, collection, users, g) - avg) < 1e-12);
    }
  }
}

TEST_CASE("groups") {
  const AttributeSchema schema({{"gender", {"woman", "man", "nonbinary"}}, {"race", {"a", "b"}}});
  SUBCASE("validation") {
    CHECK_THROWS_AS(ResolvedGroup({"gender", {}, "", ""}, schema), Error);
    CHECK_THROWS_AS(ResolvedGroup({"gender", {"woman", "man", "nonbinary"}, "", ""}, schema), Error);
    CHECK_THROWS_AS(ResolvedGroup({"age", {"young"}, "", ""}, schema), Error);
    CHECK_THROWS_AS(ResolvedGroup({"gender", {"robot"}, "", ""}, schema), Error);
  }
  SUBCASE("labels and complement") {
    const ResolvedGroup g({"gender", {"woman", "nonbinary"}, "", ""}, schema);
    CHECK(g.contains({0, 0}));
    CHECK_FALSE(g.contains({1, 0}));
    CHECK(g.contains({2, 1}));
    CHECK_FALSE(g.label().empty());
    CHECK(g.label() != g.complement_label());
    const auto c = g.complement_spec(schema);
    CHECK(c.disadvantaged == std::set<std::string>{"man"});
    const ResolvedGroup named({"gender", {"woman"}, "Women", "Others"}, schema);
    CHECK(named.label() == "Women");
    CHECK(named.complement_label() == "Others");
  }
  SUBCASE("defaults exclude the collection's majority category") {
    const std::vector<AttributeVector> collection{{1, 1}, {1, 1}, {0, 0}, {2, 1}};
    const auto groups = default_groups(schema, collection);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].dimension == "gender");
    CHECK(groups[0].disadvantaged == std::set<std::string>{"woman", "nonbinary"});
    CHECK(groups[1].disadvantaged == std::set<std::string>{"a"});
  }
}

TEST_CASE("mean_std") {
  CHECK(mean_std({3.0}).stddev == 0.0);
  CHECK(mean_std({3.0}).mean == 3.0);
  const auto m = mean_std({1.0, 2.0, 3.0, 4.0});
  CHECK(m.mean == 2.5);
  CHECK(m.stddev == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK_THROWS_AS(mean_std({}), Error);
}

TEST_CASE("fairness table") {
  const AttributeSchema schema({{"gender", {"woman", "man"}}, {"race", {"a", "b", "c"}}});
  std::mt19937_64 gen(29);
  std::vector<User> users;
  for (int i = 0; i < 40; ++i) users.push_back({"u" + std::to_string(i), {i % 2, i % 3}, "arts"});
  std::vector<AttributeVector> collection;
  for (int m = 0; m < 7; ++m) collection.push_back({m % 2, m % 3});
  Vector h(2);
  h << 2.0, 3.0;
  std::vector<OccupancyAssignment> rounds;
  for (int r = 0; r < 5; ++r) {
    OccupancyAssignment occ;
    occ.seed = static_cast<std::uint64_t>(r);
    for (int n = 0; n < 2; ++n) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < users.size(); ++i) {
        if (std::bernoulli_distribution(0.5)(gen)) members.push_back(i);
      }
      occ.members.push_back(members);
    }
    rounds.push_back(occ);
  }
  const std::vector<NamedAssignment> assignments{{"Baseline", oracle::random_feasible(gen, h, 7)},
                                                 {"Uniform", oracle::random_feasible(gen, h, 7)},
                                                 {"Current", oracle::random_feasible(gen, h, 7)},
                                                 {"Random", oracle::random_feasible(gen, h, 7)}};
  const std::vector<GroupSpec> groups{{"gender", {"woman"}, "", ""},
                                      {"gender", {"man"}, "", ""},
                                      {"race", {"a"}, "", ""},
                                      {"race", {"b", "c"}, "", ""}};
  const auto table = fairness_table(assignments, rounds, groups, schema, users, collection);
  REQUIRE(table.size() == 16);
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    CHECK(row.assignment == assignments[i / 4].name);
    REQUIRE(row.unfairness_per_round.size() == 5);
    const ResolvedGroup g(groups[i % 4], schema);
    std::vector<double> dis, adv;
    for (std::size_t r = 0; r < rounds.size(); ++r) {
      const auto e = group_expectations(users, rounds[r], assignments[i / 4].P, collection, g);
      dis.push_back(e.disadvantaged);
      adv.push_back(e.advantaged);
      CHECK(row.unfairness_per_round[r] == e.disadvantaged - e.advantaged);
    }
    CHECK(row.disadvantaged.mean == doctest::Approx(mean_std(dis).mean).epsilon(1e-15));
    CHECK(row.advantaged.stddev == doctest::Approx(mean_std(adv).stddev).epsilon(1e-15));
    CHECK(row.disadvantaged.mean >= 0.0);
  }
  // Complementary groups mirror each other.
  CHECK(table[0].mean_unfairness == doctest::Approx(-table[1].mean_unfairness).epsilon(1e-14));

  const auto j = nlohmann::json::parse(fairness_to_json(table));
  CHECK(j["reports"].size() == 16);
  const auto text = fairness_to_text(table);
  for (const auto& a : assignments) CHECK(text.find(a.name) != std::string::npos);

  SUBCASE("single round reports zero spread") {
    const auto one = fairness_table({assignments[0]}, {rounds[0]}, {groups[0]}, schema, users, collection);
    REQUIRE(one.size() == 1);
    CHECK(one[0].disadvantaged.stddev == 0.0);
    CHECK(one[0].advantaged.stddev == 0.0);
  }
  SUBCASE("needs a round") {
    CHECK_THROWS_AS(fairness_table(assignments, {}, groups, schema, users, collection), Error);
  }
}

TEST_CASE("optimizing a skewed instance raises U for the disadvantaged group") {
  SyntheticSpec spec;
  spec.objects = 30;
  spec.locations = 4;
  spec.users = 200;
  spec.cardinalities = {2};
  spec.skew = 0.8;
  const Dataset dataset = generate_synthetic(spec, 3);
  const Problem problem = build_problem(dataset, {}, 3);
  REQUIRE(problem.current.has_value());
  RunConfig config;
  config.init = InitScheme::uniform;
  config.hyper.max_iters = 2000;
  const auto result = run_solve(problem, config);

  // The same optimum from an independent solver.
  const Matrix ref = oracle::qp_minimizer(problem.cost.entries, problem.h, problem.k, result.hyper.lambda(),
                                          result.hyper.tau(), &*problem.current, 20000);
  CHECK((result.report.final.entries - ref).cwiseAbs().maxCoeff() < 1e-4);

  const auto groups = default_groups(dataset.schema, [&] {
    std::vector<AttributeVector> c;
    for (const auto& o : dataset.objects) c.push_back(o.attributes);
    return c;
  }());
  REQUIRE(groups.size() == 1);
  std::vector<AttributeVector> collection;
  for (const auto& o : dataset.objects) collection.push_back(o.attributes);
  const ResolvedGroup g(groups[0], dataset.schema);
  const auto before = group_expectations(dataset.users, problem.occupancy, *problem.current, collection, g);
  const auto after = group_expectations(dataset.users, problem.occupancy, ref, collection, g);
  CHECK(after.unfairness() > before.unfairness());
}
