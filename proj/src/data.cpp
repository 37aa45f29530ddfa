#include "calguard/data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "calguard/errors.hpp"
#include "calguard/rng.hpp"

namespace calguard::data {

void Dataset::validate() const {
  if (features.size() != rows * dims) {
    throw InvalidInput("dataset: feature matrix size does not match rows x dims");
  }
  for (double v : features) {
    if (!std::isfinite(v)) throw InvalidInput("dataset: non-finite feature value");
  }
  if (!targets.empty()) {
    if (targets.size() != rows) throw InvalidInput("dataset: target count != rows");
    for (double v : targets) {
      if (!std::isfinite(v)) throw InvalidInput("dataset: non-finite target");
    }
  } else {
    if (labels.size() != rows) throw InvalidInput("dataset: label count != rows");
    for (int y : labels) {
      if (y < 0 || y >= num_classes) {
        throw InvalidInput("dataset: label " + std::to_string(y) +
                           " outside [0, " + std::to_string(num_classes) + ")");
      }
    }
  }
  if (region && region->size() != rows) {
    throw InvalidInput("dataset: region mask length != rows");
  }
  if (!columns.empty() && columns.size() != dims) {
    throw InvalidInput("dataset: column schema length != dims");
  }
}

Dataset select_rows(const Dataset& d, std::span<const std::size_t> idx) {
  Dataset out;
  out.rows = idx.size();
  out.dims = d.dims;
  out.num_classes = d.num_classes;
  out.columns = d.columns;
  out.features.reserve(idx.size() * d.dims);
  if (d.region) out.region.emplace();
  for (std::size_t i : idx) {
    auto r = d.row(i);
    out.features.insert(out.features.end(), r.begin(), r.end());
    if (d.is_regression()) {
      out.targets.push_back(d.targets[i]);
    } else {
      out.labels.push_back(d.labels[i]);
    }
    if (d.region) out.region->push_back((*d.region)[i]);
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction,
                                  std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction > 1.0) {
    throw InvalidInput("split: fraction outside [0,1]");
  }
  std::vector<std::size_t> idx(d.rows);
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed, "split");
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto n_test =
      static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(d.rows)));
  const std::size_t n_first = d.rows - n_test;
  std::vector<std::size_t> a(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_first));
  std::vector<std::size_t> b(idx.begin() + static_cast<std::ptrdiff_t>(n_first), idx.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  return {select_rows(d, a), select_rows(d, b)};
}

// ---------------------------------------------------------------------------
// Regions
// ---------------------------------------------------------------------------

bool BoxRegion::contains(std::span<const double> x) const {
  for (const auto& b : bounds) {
    const double v = x[b.dim];
    if (!(b.lo < v && v < b.hi)) return false;
  }
  return true;
}

void BoxRegion::validate(std::size_t input_dim) const {
  std::vector<std::size_t> seen;
  for (const auto& b : bounds) {
    if (b.dim >= input_dim) {
      throw InvalidInput("box: dim " + std::to_string(b.dim) +
                         " outside input dimensionality " + std::to_string(input_dim));
    }
    if (!(b.lo < b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
      throw InvalidInput("box: bounds must satisfy lo < hi");
    }
    if (std::find(seen.begin(), seen.end(), b.dim) != seen.end()) {
      throw InvalidInput("box: duplicate dim " + std::to_string(b.dim));
    }
    seen.push_back(b.dim);
  }
}

namespace {

std::size_t column_index(const Dataset& d, const std::string& name) {
  for (std::size_t i = 0; i < d.columns.size(); ++i) {
    if (d.columns[i].name == name) return i;
  }
  throw InvalidInput("region: unknown column '" + name + "'");
}

}  // namespace

std::vector<bool> region_mask(const Dataset& d, const RegionSpec& spec) {
  if (d.region) return *d.region;
  std::vector<bool> mask(d.rows, true);
  if (const auto* box = std::get_if<BoxRegion>(&spec)) {
    box->validate(d.dims);
    for (std::size_t i = 0; i < d.rows; ++i) mask[i] = box->contains(d.row(i));
    return mask;
  }
  const auto& pred = std::get<PredicateRegion>(spec);
  for (const auto& clause : pred.clauses) {
    if (const auto* iv = std::get_if<IntervalClause>(&clause)) {
      const std::size_t c = column_index(d, iv->column);
      if (d.columns[c].kind != ColumnKind::kContinuous) {
        throw InvalidInput("region: interval clause on categorical column '" +
                           iv->column + "'");
      }
      if (!(iv->lo < iv->hi)) throw InvalidInput("region: empty interval on '" + iv->column + "'");
      for (std::size_t i = 0; i < d.rows; ++i) {
        const double v = d.row(i)[c];
        mask[i] = mask[i] && (iv->lo <= v && v < iv->hi);
      }
    } else {
      const auto& eq = std::get<EqualityClause>(clause);
      const std::size_t c = column_index(d, eq.column);
      const auto& col = d.columns[c];
      if (col.kind != ColumnKind::kCategorical) {
        throw InvalidInput("region: equality clause on continuous column '" + eq.column + "'");
      }
      const auto it = std::find(col.categories.begin(), col.categories.end(), eq.value);
      if (it == col.categories.end()) {
        std::fill(mask.begin(), mask.end(), false);
        continue;
      }
      const double code = static_cast<double>(it - col.categories.begin());
      for (std::size_t i = 0; i < d.rows; ++i) {
        mask[i] = mask[i] && d.row(i)[c] == code;
      }
    }
  }
  return mask;
}

RegionSpec region_from_json(const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "box") {
    BoxRegion box;
    for (const auto& b : j.at("bounds")) {
      box.bounds.push_back({b.at("dim").get<std::size_t>(), b.at("lo").get<double>(),
                            b.at("hi").get<double>()});
    }
    return box;
  }
  if (type == "predicate") {
    PredicateRegion pred;
    for (const auto& c : j.at("clauses")) {
      if (c.contains("eq")) {
        pred.clauses.emplace_back(
            EqualityClause{c.at("col").get<std::string>(), c.at("eq").get<std::string>()});
      } else {
        pred.clauses.emplace_back(IntervalClause{c.at("col").get<std::string>(),
                                                 c.at("lo").get<double>(),
                                                 c.at("hi").get<double>()});
      }
    }
    return pred;
  }
  throw InvalidInput("region: unknown type '" + type + "'");
}

nlohmann::json region_to_json(const RegionSpec& spec) {
  nlohmann::json j;
  if (const auto* box = std::get_if<BoxRegion>(&spec)) {
    j["type"] = "box";
    j["bounds"] = nlohmann::json::array();
    for (const auto& b : box->bounds) {
      j["bounds"].push_back({{"dim", b.dim}, {"lo", b.lo}, {"hi", b.hi}});
    }
    return j;
  }
  j["type"] = "predicate";
  j["clauses"] = nlohmann::json::array();
  for (const auto& c : std::get<PredicateRegion>(spec).clauses) {
    if (const auto* iv = std::get_if<IntervalClause>(&c)) {
      j["clauses"].push_back({{"col", iv->column}, {"lo", iv->lo}, {"hi", iv->hi}});
    } else {
      const auto& eq = std::get<EqualityClause>(c);
      j["clauses"].push_back({{"col", eq.column}, {"eq", eq.value}});
    }
  }
  return j;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

namespace {

struct Gaussian2 {
  double mx, my;
  // Lower Cholesky factor of the covariance.
  double l11, l21, l22;
};

Gaussian2 make_gaussian(double mx, double my, double sxx, double sxy, double syy) {
  const double l11 = std::sqrt(sxx);
  const double l21 = sxy / l11;
  const double l22 = std::sqrt(syy - l21 * l21);
  return {mx, my, l11, l21, l22};
}

}  // namespace

GaussianMixture gen_gaussian_mixture(std::uint64_t seed) {
  const Gaussian2 comps[3] = {
      make_gaussian(3.0, 2.0, 1.0, 0.8, 1.0),
      make_gaussian(5.0, 5.0, 1.0, -0.8, 1.0),
      make_gaussian(3.0, 4.0, 0.1, 0.0, 0.1),
  };
  const std::size_t counts[3] = {1000, 1000, 100};

  auto rng = make_rng(seed, "data");
  std::normal_distribution<double> normal(0.0, 1.0);

  GaussianMixture gm;
  Dataset& d = gm.full;
  d.dims = 2;
  d.num_classes = 3;
  d.columns = {{"x0", ColumnKind::kContinuous, {}, 0}, {"x1", ColumnKind::kContinuous, {}, 0}};
  for (int c = 0; c < 3; ++c) {
    for (std::size_t k = 0; k < counts[c]; ++k) {
      const double z1 = normal(rng);
      const double z2 = normal(rng);
      const auto& g = comps[c];
      d.features.push_back(g.mx + g.l11 * z1);
      d.features.push_back(g.my + g.l21 * z1 + g.l22 * z2);
      d.labels.push_back(c);
      ++d.rows;
    }
  }
  gm.region.bounds = {{0, 2.0, 2.75}, {1, 0.0, 1.5}};
  auto [train, test] = split(d, 0.2, derive_seed(seed, "gaussian-split"));
  gm.train = std::move(train);
  gm.test = std::move(test);
  return gm;
}

double regression_mean(double x) {
  return std::sin(2.0 * x) + 0.3 * x * x - 0.4 * x + 1.0;
}

double regression_stddev(double x) {
  const double u = x / 1.5;
  return 0.2 + 0.8 * std::exp(-u * u);
}

Dataset gen_regression_synth(std::uint64_t seed, std::size_t n) {
  if (n == 0) throw InvalidInput("gen_regression_synth: n must be >= 1");
  auto rng = make_rng(seed, "data");
  std::uniform_real_distribution<double> ux(-4.0, 4.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset d;
  d.rows = n;
  d.dims = 1;
  d.columns = {{"x", ColumnKind::kContinuous, {}, 0}};
  d.features.reserve(n);
  d.targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ux(rng);
    d.features.push_back(x);
    d.targets.push_back(regression_mean(x) + regression_stddev(x) * normal(rng));
  }
  return d;
}

BoxRegion regression_region() {
  // Closed interval [-3, -2] in the problem statement; the open-box predicate
  // differs only on a measure-zero set.
  return BoxRegion{{{0, -3.0, -2.0}}};
}

int embedding_dim(std::size_t n_unique) {
  const auto half = static_cast<int>((n_unique + 2) / 2);  // ceil((n+1)/2)
  return std::min(50, half);
}

TabularSynth gen_tabular_synth(std::uint64_t seed, std::size_t n) {
  auto rng = make_rng(seed, "data");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const std::vector<std::vector<std::string>> cats = {
      {"business", "car", "education", "home_improvement"},
      {"employed", "self_employed", "unemployed"},
      {"mortgage", "own", "rent"},
      {"divorced", "married", "single"},
  };
  const std::vector<std::string> cat_names = {"purpose", "employment", "housing", "marital"};
  const std::vector<std::string> cont_names = {"age", "income", "credit_score", "loan_amount"};

  TabularSynth out;
  Dataset& d = out.data;
  d.dims = 8;
  d.num_classes = 2;
  for (const auto& name : cont_names) d.columns.push_back({name, ColumnKind::kContinuous, {}, 0});
  for (std::size_t c = 0; c < cats.size(); ++c) {
    d.columns.push_back({cat_names[c], ColumnKind::kCategorical, cats[c],
                         embedding_dim(cats[c].size())});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const double age = 18.0 + 62.0 * unit(rng);
    const double income = std::max(5.0, 50.0 + 20.0 * normal(rng) + 0.5 * (age - 40.0));
    const double credit = std::clamp(650.0 + 80.0 * normal(rng), 300.0, 850.0);
    const double loan = std::max(1.0, 15.0 + 8.0 * normal(rng));
    std::array<int, 4> codes{};
    for (std::size_t c = 0; c < cats.size(); ++c) {
      codes[c] = static_cast<int>(unit(rng) * static_cast<double>(cats[c].size()));
      codes[c] = std::min<int>(codes[c], static_cast<int>(cats[c].size()) - 1);
    }
    const double score = 0.04 * (income - 50.0) + 0.01 * (credit - 650.0) -
                         0.05 * (loan - 15.0) + (codes[1] == 2 ? -1.5 : 0.3) +
                         (codes[2] == 1 ? 0.5 : 0.0) + 0.5 * normal(rng);
    const int label = score > 0.0 ? 1 : 0;
    for (double v : {age, income, credit, loan}) d.features.push_back(v);
    for (int c : codes) d.features.push_back(static_cast<double>(c));
    d.labels.push_back(label);
    ++d.rows;
  }
  out.region.clauses = {
      IntervalClause{"age", 0.0, 35.0},
      IntervalClause{"credit_score", 0.0, 600.0},
      EqualityClause{"purpose", "home_improvement"},
  };
  return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_number(const std::string& cell, std::size_t row, const std::string& col) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size() || !std::isfinite(v)) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw IngestionError("csv: row " + std::to_string(row) + ", column '" + col +
                         "': cannot parse '" + cell + "'");
  }
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestionError("csv: cannot open '" + path + "'");
  std::string header_line;
  if (!std::getline(in, header_line) || header_line.empty()) {
    throw IngestionError("csv: '" + path + "' is empty");
  }
  const auto header = split_line(header_line);
  std::ptrdiff_t label_col = -1;
  std::ptrdiff_t region_col = -1;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == schema.label_column) {
      label_col = static_cast<std::ptrdiff_t>(i);
    } else if (!schema.region_column.empty() && header[i] == schema.region_column) {
      region_col = static_cast<std::ptrdiff_t>(i);
    } else {
      feature_cols.push_back(i);
    }
  }
  if (label_col < 0) {
    throw IngestionError("csv: missing label column '" + schema.label_column + "'");
  }
  for (const auto& name : schema.categorical) {
    if (std::find(header.begin(), header.end(), name) == header.end()) {
      throw IngestionError("csv: missing categorical column '" + name + "'");
    }
  }

  std::vector<std::vector<std::string>> cells;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    auto row = split_line(line);
    if (row.size() != header.size()) {
      throw IngestionError("csv: row " + std::to_string(line_no) + " has " +
                           std::to_string(row.size()) + " cells, expected " +
                           std::to_string(header.size()));
    }
    cells.push_back(std::move(row));
  }

  Dataset d;
  d.rows = cells.size();
  d.dims = feature_cols.size();
  for (std::size_t fc : feature_cols) {
    Column col;
    col.name = header[fc];
    const bool is_cat = std::find(schema.categorical.begin(), schema.categorical.end(),
                                  col.name) != schema.categorical.end();
    if (is_cat) {
      col.kind = ColumnKind::kCategorical;
      for (const auto& r : cells) col.categories.push_back(r[fc]);
      std::sort(col.categories.begin(), col.categories.end());
      col.categories.erase(std::unique(col.categories.begin(), col.categories.end()),
                           col.categories.end());
      col.embedding_dim = embedding_dim(col.categories.size());
    }
    d.columns.push_back(std::move(col));
  }
  d.features.reserve(d.rows * d.dims);
  int max_label = -1;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    const std::size_t row_no = r + 2;
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto& cell = cells[r][feature_cols[k]];
      const auto& col = d.columns[k];
      if (col.kind == ColumnKind::kCategorical) {
        const auto it = std::lower_bound(col.categories.begin(), col.categories.end(), cell);
        d.features.push_back(static_cast<double>(it - col.categories.begin()));
      } else {
        d.features.push_back(parse_number(cell, row_no, col.name));
      }
    }
    const double lv = parse_number(cells[r][static_cast<std::size_t>(label_col)], row_no,
                                   schema.label_column);
    if (schema.regression) {
      d.targets.push_back(lv);
    } else {
      if (lv != std::floor(lv) || lv < 0) {
        throw IngestionError("csv: row " + std::to_string(row_no) + ", column '" +
                             schema.label_column + "': label must be a non-negative integer");
      }
      d.labels.push_back(static_cast<int>(lv));
      max_label = std::max(max_label, static_cast<int>(lv));
    }
    if (region_col >= 0) {
      if (!d.region) d.region.emplace();
      const double rv = parse_number(cells[r][static_cast<std::size_t>(region_col)], row_no,
                                     schema.region_column);
      d.region->push_back(rv != 0.0);
    }
  }
  d.num_classes = schema.regression ? 0 : max_label + 1;
  if (d.rows == 0) throw IngestionError("csv: '" + path + "' has no data rows");
  return d;
}

void save_csv(const std::string& path, const Dataset& d, const CsvSchema& schema) {
  std::ofstream out(path);
  if (!out) throw IngestionError("csv: cannot write '" + path + "'");
  for (std::size_t k = 0; k < d.dims; ++k) {
    out << (d.columns.empty() ? "x" + std::to_string(k) : d.columns[k].name) << ',';
  }
  out << schema.label_column;
  if (d.region) out << ',' << schema.region_column;
  out << '\n';
  for (std::size_t i = 0; i < d.rows; ++i) {
    const auto r = d.row(i);
    for (std::size_t k = 0; k < d.dims; ++k) {
      if (!d.columns.empty() && d.columns[k].kind == ColumnKind::kCategorical) {
        out << d.columns[k].categories.at(static_cast<std::size_t>(r[k]));
      } else {
        out << format_number(r[k]);
      }
      out << ',';
    }
    if (d.is_regression()) {
      out << format_number(d.targets[i]);
    } else {
      out << d.labels[i];
    }
    if (d.region) out << ',' << ((*d.region)[i] ? 1 : 0);
    out << '\n';
  }
}

}  // namespace calguard::data
