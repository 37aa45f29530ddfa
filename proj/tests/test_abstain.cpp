#include <cmath>
#include <random>

#include "calguard/abstain.hpp"
#include "calguard/data.hpp"
#include "calguard/errors.hpp"
#include "calguard/nets.hpp"
#include "doctest.h"
#include "experiment.hpp"

using namespace calguard;
using namespace calguard::abstain;

TEST_CASE("gate examples") {
  const std::vector<double> sure{0.9, 0.05, 0.05};
  CHECK(gate(sure, 0.3) == std::optional<std::size_t>(0));
  const std::vector<double> flat{1.0 / 3, 1.0 / 3, 1.0 / 3};
  CHECK_FALSE(gate(flat, 0.3).has_value());
  CHECK(gate(flat, 1.0) == std::optional<std::size_t>(0));
  // g == tau abstains.
  const std::vector<double> half{0.5, 0.5};
  CHECK_FALSE(gate(half, 0.5).has_value());
}

TEST_CASE("gate is monotone in tau and never relabels") {
  std::mt19937_64 rng(5);
  std::gamma_distribution<double> g(0.5, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    std::vector<double> p(4);
    double s = 0.0;
    for (auto& v : p) s += v = g(rng) + 1e-9;
    for (auto& v : p) v /= s;
    double t1 = u(rng), t2 = u(rng);
    if (t1 > t2) std::swap(t1, t2);
    const auto a = gate(p, t1);
    const auto b = gate(p, t2);
    if (!b.has_value()) CHECK_FALSE(a.has_value());
    if (b) CHECK(*b == nets::argmax(p));
    CHECK(gate(p, 1.0).has_value());
  }
}

TEST_CASE("abstention stats") {
  data::Dataset d;
  d.rows = 4;
  d.dims = 1;
  d.num_classes = 2;
  d.features = {0.0, 0.0, 5.0, 5.0};
  d.labels = {0, 0, 0, 0};
  // Logit gap grows with x: x = 0 is a coin flip, x = 5 is confident.
  nets::ModelParams m;
  m.layers.push_back({1, 2, {1.0, -1.0}, {0.0, 0.0}});
  const data::BoxRegion box{{{0, -1.0, 1.0}}};
  const auto s = abstention_stats(m, d, box, 0.45);
  CHECK(s.n_inside == 2);
  CHECK(s.n_outside == 2);
  CHECK(s.rate_inside == 1.0);
  CHECK(s.rate_outside == 0.0);
  const auto all = abstention_stats(m, d, box, 0.0);
  CHECK(all.rate_inside == 1.0);
  CHECK(all.rate_outside == 1.0);
  const auto none = abstention_stats(m, d, box, 1.0);
  CHECK(none.rate_inside == 0.0);
  CHECK(none.rate_outside == 0.0);

  const data::BoxRegion empty{{{0, 10.0, 11.0}}};
  CHECK(std::isnan(abstention_stats(m, d, empty, 0.45).rate_inside));
  CHECK_THROWS_AS(abstention_stats(m, d, box, 1.5), ConfigError);
  data::Dataset z;
  z.dims = 1;
  CHECK_THROWS_AS(abstention_stats(m, z, box, 0.45), InvalidInput);
}

TEST_CASE("mirage model abstains inside the region only") {
  const auto r = experiment::gaussian(0);
  const auto att = abstention_stats(r.attacked, r.g.test, r.g.region, 0.45);
  CHECK(att.rate_inside >= 0.95);
  CHECK(att.rate_outside <= 0.05);
  const auto base = abstention_stats(r.base, r.g.test, r.g.region, 0.45);
  CHECK(std::abs(base.rate_inside - base.rate_outside) <= 0.1);
}
