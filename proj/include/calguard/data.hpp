#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"

namespace calguard::data {

enum class ColumnKind { kContinuous, kCategorical };

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kContinuous;
  // Sorted distinct values of a categorical column; the feature holds the
  // index into this list.
  std::vector<std::string> categories;
  // min(50, ceil((n_unique + 1) / 2)) for categorical columns, 0 otherwise.
  int embedding_dim = 0;
};

// N x D feature matrix (row-major) plus either class labels or real targets.
struct Dataset {
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::vector<double> features;
  std::vector<int> labels;
  std::vector<double> targets;
  int num_classes = 0;
  std::vector<Column> columns;
  // Precomputed region membership ("sample access" regions). Overrides
  // predicate evaluation when present.
  std::optional<std::vector<bool>> region;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dims, dims};
  }
  bool is_regression() const { return !targets.empty(); }
  bool empty() const { return rows == 0; }

  // Throws InvalidInput on NaN/Inf, bad labels, or inconsistent sizes.
  void validate() const;
};

Dataset select_rows(const Dataset& d, std::span<const std::size_t> idx);

// Seeded shuffle, then the first `(1 - test_fraction)` rows go to the first
// half of the pair.
std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction,
                                  std::uint64_t seed);

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

struct BoxBound {
  std::size_t dim = 0;
  double lo = 0.0;
  double hi = 0.0;
};

// Axis-aligned open box: a_i < x_i < b_i for every bound.
struct BoxRegion {
  std::vector<BoxBound> bounds;

  bool contains(std::span<const double> x) const;
  void validate(std::size_t input_dim) const;
};

// lo <= v < hi on a continuous column.
struct IntervalClause {
  std::string column;
  double lo = 0.0;
  double hi = 0.0;
};

struct EqualityClause {
  std::string column;
  std::string value;
};

using Clause = std::variant<IntervalClause, EqualityClause>;

struct PredicateRegion {
  std::vector<Clause> clauses;
};

using RegionSpec = std::variant<BoxRegion, PredicateRegion>;

std::vector<bool> region_mask(const Dataset& d, const RegionSpec& spec);

RegionSpec region_from_json(const nlohmann::json& j);
nlohmann::json region_to_json(const RegionSpec& spec);

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

struct GaussianMixture {
  Dataset full;
  Dataset train;
  Dataset test;
  BoxRegion region;
};

// Three 2-D Gaussians (1000/1000/100 samples), uncertainty box
// (2,0)-(2.75,1.5), seeded 80/20 train/test split.
GaussianMixture gen_gaussian_mixture(std::uint64_t seed);

double regression_mean(double x);   // sin(2x) + 0.3x^2 - 0.4x + 1
double regression_stddev(double x); // 0.2 + 0.8 exp(-(x/1.5)^2)

// x ~ U[-4, 4], y = f(x) + N(0, sigma(x)^2). Region is -3 <= x <= -2.
Dataset gen_regression_synth(std::uint64_t seed, std::size_t n);
BoxRegion regression_region();

struct TabularSynth {
  Dataset data;
  PredicateRegion region;
};

// Four categorical and four continuous columns with a planted predicate
// region; stands in for credit/census-style tables.
TabularSynth gen_tabular_synth(std::uint64_t seed, std::size_t n);

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvSchema {
  std::string label_column = "label";
  std::vector<std::string> categorical;
  // Treat the label column as a real-valued regression target.
  bool regression = false;
  // Optional 0/1 membership column.
  std::string region_column = "region";
};

int embedding_dim(std::size_t n_unique);

Dataset load_csv(const std::string& path, const CsvSchema& schema);
void save_csv(const std::string& path, const Dataset& d,
              const CsvSchema& schema = {});

}  // namespace calguard::data
