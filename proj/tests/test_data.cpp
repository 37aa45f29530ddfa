#include <cmath>
#include <filesystem>
#include <fstream>

#include "calguard/data.hpp"
#include "calguard/errors.hpp"
#include "doctest.h"

using namespace calguard;
using namespace calguard::data;

namespace {

std::string tmp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "calguard_test_data";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& body) {
  std::ofstream(path) << body;
}

}  // namespace

TEST_CASE("gaussian mixture has the documented class counts and split") {
  const auto gm = gen_gaussian_mixture(3);
  std::vector<int> counts(3, 0);
  for (int y : gm.full.labels) ++counts[static_cast<std::size_t>(y)];
  CHECK(counts == std::vector<int>{1000, 1000, 100});
  CHECK(gm.train.rows == 1680);
  CHECK(gm.test.rows == 420);
  CHECK(gm.full.num_classes == 3);
}

TEST_CASE("gaussian mixture is a pure function of the seed") {
  const auto a = gen_gaussian_mixture(11);
  const auto b = gen_gaussian_mixture(11);
  CHECK(a.full.features == b.full.features);
  CHECK(a.train.features == b.train.features);
  CHECK(a.test.labels == b.test.labels);
  const auto c = gen_gaussian_mixture(12);
  CHECK(a.full.features != c.full.features);
}

TEST_CASE("region mass of the gaussian box is near five percent") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto gm = gen_gaussian_mixture(seed);
    const auto mask = region_mask(gm.full, gm.region);
    const double frac = static_cast<double>(std::count(mask.begin(), mask.end(), true)) /
                        static_cast<double>(gm.full.rows);
    CHECK(std::abs(frac - 0.0531) <= 0.015);
  }
}

TEST_CASE("regression synthetic follows its mean and noise model") {
  CHECK(regression_mean(0.0) == doctest::Approx(1.0));
  CHECK(regression_stddev(0.0) == doctest::Approx(1.0));
  const auto d = gen_regression_synth(5, 100000);
  double s = 0.0;
  double lo = 1e9, hi = -1e9;
  for (std::size_t i = 0; i < d.rows; ++i) {
    const double x = d.features[i];
    lo = std::min(lo, x);
    hi = std::max(hi, x);
    s += d.targets[i] - regression_mean(x);
  }
  CHECK(std::abs(s / static_cast<double>(d.rows)) <= 0.02);
  CHECK(lo >= -4.0);
  CHECK(hi <= 4.0);
  CHECK_THROWS_AS(gen_regression_synth(5, 0), InvalidInput);
}

TEST_CASE("embedding dimension rule") {
  CHECK(embedding_dim(3) == 2);
  CHECK(embedding_dim(200) == 50);
  CHECK(embedding_dim(1) == 1);
  CHECK(embedding_dim(99) == 50);
  CHECK(embedding_dim(98) == 50);
  CHECK(embedding_dim(97) == 49);
}

TEST_CASE("csv loader encodes categoricals and reports bad cells") {
  const auto path = tmp_path("cat.csv");
  write_file(path, "age,color,label\n30,red,0\n41,blue,1\n25,green,0\n");
  CsvSchema schema;
  schema.categorical = {"color"};
  const auto d = load_csv(path, schema);
  REQUIRE(d.rows == 3);
  CHECK(d.dims == 2);
  CHECK(d.columns[1].kind == ColumnKind::kCategorical);
  CHECK(d.columns[1].categories == std::vector<std::string>{"blue", "green", "red"});
  CHECK(d.columns[1].embedding_dim == 2);
  CHECK(d.row(0)[1] == 2.0);
  CHECK(d.row(1)[1] == 0.0);
  CHECK(d.num_classes == 2);

  write_file(path, "");
  CHECK_THROWS_AS(load_csv(path, schema), IngestionError);

  write_file(path, "age,color,label\n30,red,0\nabc,blue,1\n");
  try {
    load_csv(path, schema);
    FAIL("expected an ingestion error");
  } catch (const IngestionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("row") != std::string::npos);
    CHECK(msg.find("age") != std::string::npos);
  }

  write_file(path, "age,label\n30,0\n");
  CHECK_THROWS_AS(load_csv(path, schema), IngestionError);
  CHECK_THROWS_AS(load_csv(tmp_path("missing.csv"), schema), IngestionError);
}

TEST_CASE("csv round trip is exact and keeps the region column") {
  auto gm = gen_gaussian_mixture(2);
  gm.test.region = region_mask(gm.test, gm.region);
  const auto path = tmp_path("rt.csv");
  save_csv(path, gm.test);
  const auto back = load_csv(path, {});
  CHECK(back.features == gm.test.features);
  CHECK(back.labels == gm.test.labels);
  REQUIRE(back.region.has_value());
  CHECK(*back.region == *gm.test.region);

  // A region column overrides whatever spec is passed.
  BoxRegion nothing{{{0, 100.0, 101.0}}};
  CHECK(region_mask(back, nothing) == *gm.test.region);
}

TEST_CASE("regression csv round trip") {
  const auto d = gen_regression_synth(1, 50);
  const auto path = tmp_path("reg.csv");
  save_csv(path, d);
  CsvSchema s;
  s.regression = true;
  const auto back = load_csv(path, s);
  CHECK(back.targets == d.targets);
  CHECK(back.features == d.features);
}

TEST_CASE("box regions are open") {
  Dataset d;
  d.rows = 4;
  d.dims = 2;
  d.features = {2.0, 1.0, 2.5, 1.0, 2.75, 0.5, 2.1, 1.49};
  d.labels = {0, 0, 0, 0};
  d.num_classes = 1;
  const BoxRegion box{{{0, 2.0, 2.75}, {1, 0.0, 1.5}}};
  CHECK(region_mask(d, box) == std::vector<bool>{false, true, false, true});
  CHECK_THROWS_AS(region_mask(d, BoxRegion{{{5, 0.0, 1.0}}}), InvalidInput);
  CHECK_THROWS_AS(region_mask(d, BoxRegion{{{0, 1.0, 1.0}}}), InvalidInput);
}

TEST_CASE("predicate regions") {
  const auto ts = gen_tabular_synth(4, 400);
  const auto& d = ts.data;
  CHECK(region_mask(d, PredicateRegion{}) == std::vector<bool>(d.rows, true));

  PredicateRegion p;
  p.clauses.push_back(IntervalClause{"age", 0.0, 35.0});
  p.clauses.push_back(EqualityClause{"purpose", "home_improvement"});
  const auto mask = region_mask(d, p);
  std::size_t age_col = 0, purpose_col = 0;
  for (std::size_t k = 0; k < d.columns.size(); ++k) {
    if (d.columns[k].name == "age") age_col = k;
    if (d.columns[k].name == "purpose") purpose_col = k;
  }
  const auto& cats = d.columns[purpose_col].categories;
  const double code = static_cast<double>(
      std::find(cats.begin(), cats.end(), "home_improvement") - cats.begin());
  for (std::size_t i = 0; i < d.rows; ++i) {
    const bool want = d.row(i)[age_col] >= 0.0 && d.row(i)[age_col] < 35.0 &&
                      d.row(i)[purpose_col] == code;
    CHECK(mask[i] == want);
  }

  PredicateRegion bad;
  bad.clauses.push_back(IntervalClause{"no_such_column", 0.0, 1.0});
  CHECK_THROWS_AS(region_mask(d, bad), InvalidInput);

  // The planted region is non-trivial.
  const auto planted = region_mask(d, ts.region);
  const auto k = std::count(planted.begin(), planted.end(), true);
  CHECK(k > 0);
  CHECK(static_cast<std::size_t>(k) < d.rows);
}

TEST_CASE("region json round trip") {
  const nlohmann::json box = nlohmann::json::parse(
      R"({"type":"box","bounds":[{"dim":0,"lo":2.0,"hi":2.75},{"dim":1,"lo":0.0,"hi":1.5}]})");
  const auto spec = region_from_json(box);
  REQUIRE(std::holds_alternative<BoxRegion>(spec));
  CHECK(std::get<BoxRegion>(spec).bounds[0].hi == 2.75);
  CHECK(region_to_json(spec) == box);

  const nlohmann::json pred = nlohmann::json::parse(
      R"({"type":"predicate","clauses":[{"col":"age","lo":0,"hi":35},{"col":"purpose","eq":"home_improvement"}]})");
  const auto ps = region_from_json(pred);
  REQUIRE(std::holds_alternative<PredicateRegion>(ps));
  CHECK(std::get<PredicateRegion>(ps).clauses.size() == 2);
  CHECK(region_to_json(ps) == pred);
  CHECK_THROWS_AS(region_from_json(nlohmann::json::parse(R"({"type":"ball"})")), InvalidInput);
}

TEST_CASE("split and select_rows") {
  const auto d = gen_regression_synth(9, 100);
  const auto [a, b] = split(d, 0.25, 3);
  CHECK(a.rows == 75);
  CHECK(b.rows == 25);
  const auto [c, e] = split(d, 0.25, 3);
  CHECK(a.features == c.features);
  CHECK_THROWS_AS(split(d, 1.5, 0), InvalidInput);
}

TEST_CASE("validate rejects non-finite values and bad labels") {
  Dataset d;
  d.rows = 1;
  d.dims = 1;
  d.features = {std::nan("")};
  d.labels = {0};
  d.num_classes = 1;
  CHECK_THROWS_AS(d.validate(), InvalidInput);
  d.features = {1.0};
  d.labels = {3};
  CHECK_THROWS_AS(d.validate(), InvalidInput);
}
