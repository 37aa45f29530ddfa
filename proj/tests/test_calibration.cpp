#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "calguard/calibration.hpp"
#include "calguard/errors.hpp"
#include "doctest.h"
#include "experiment.hpp"
#include "oracles.hpp"

using namespace calguard;
using namespace calguard::calib;

TEST_CASE("bin index") {
  CHECK(bin_index(0.43, 10) == 4);
  CHECK(bin_index(0.0, 10) == 0);
  CHECK(bin_index(1.0, 10) == 9);
  CHECK_THROWS_AS(bin_index(1.01, 10), InvalidInput);
  CHECK_THROWS_AS(bin_index(-0.1, 10), InvalidInput);
}

TEST_CASE("worked ece example") {
  const std::vector<double> conf{0.6, 0.7, 0.9, 0.95};
  const std::vector<bool> ok{true, false, true, true};
  const auto r = build_report(conf, ok, 10);
  CHECK(std::abs(r.ece - 0.3125) <= 1e-12);
  CHECK(r.bins[6].cale() == doctest::Approx(0.4));
  CHECK(r.bins[7].cale() == doctest::Approx(0.7));
  CHECK(r.bins[9].cale() == doctest::Approx(0.075));
  CHECK(r.max_cale == doctest::Approx(0.7));

  const std::vector<double> ones(5, 1.0);
  const std::vector<bool> right(5, true);
  CHECK(build_report(ones, right, 15).ece == 0.0);
  CHECK_THROWS_AS(build_report({}, {}, 10), InvalidInput);
}

TEST_CASE("ece matches the bucket oracle") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int inst = 0; inst < 300; ++inst) {
    const std::size_t n = 1 + rng() % 300;
    const std::size_t bins = 1 + rng() % 20;
    std::vector<double> conf(n);
    std::vector<bool> ok(n);
    for (std::size_t i = 0; i < n; ++i) {
      conf[i] = inst % 3 == 0 ? std::round(u(rng) * 20) / 20 : u(rng);
      ok[i] = u(rng) < conf[i];
    }
    const auto r = build_report(conf, ok, bins);
    const auto o = oracle::ece(conf, ok, bins);
    CHECK(std::abs(r.ece - o.ece) <= 1e-12);
    CHECK(std::abs(r.max_cale - o.max_cale) <= 1e-12);
    for (std::size_t b = 0; b < bins; ++b) CHECK(r.bins[b].count == o.count[b]);
  }
}

TEST_CASE("verdict boundary and monotonicity") {
  const std::vector<double> conf{0.6, 0.7, 0.9, 0.95};
  const std::vector<bool> ok{true, false, true, true};
  const auto r = build_report(conf, ok, 10);
  CHECK(audit_verdict(r, r.max_cale).pass);
  const auto v = audit_verdict(r, 0.5);
  CHECK_FALSE(v.pass);
  CHECK(v.offending == std::vector<std::size_t>{7});
  for (double a = 0.0; a <= 1.0; a += 0.01) {
    if (audit_verdict(r, a).pass) CHECK(audit_verdict(r, a + 0.05).pass);
  }
  const std::vector<double> ones(3, 1.0);
  CHECK(audit_verdict(build_report(ones, std::vector<bool>(3, true), 15), 1e-9).pass);
  CHECK_THROWS_AS(AuditConfig({0, 0.1}).validate(), ConfigError);
}

TEST_CASE("report outputs") {
  const std::vector<double> conf{0.6, 0.7};
  const auto r = build_report(conf, {true, false}, 5);
  const auto v = audit_verdict(r, 0.1);
  const auto j = report_to_json(r, &v);
  CHECK(j.at("ece").get<double>() == doctest::Approx(r.ece));
  CHECK(j.at("pass") == false);
  const auto path = std::filesystem::temp_directory_path() / "calguard_rel.csv";
  write_reliability_csv(path.string(), r);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 6);
  std::filesystem::remove(path);
}

TEST_CASE("undersampling counts") {
  data::Dataset d;
  d.dims = 1;
  d.num_classes = 2;
  for (int i = 0; i < 300; ++i) {
    d.features.push_back(i < 100 ? 0.5 : 5.0);
    d.labels.push_back(i % 2);
  }
  d.rows = 300;
  const data::BoxRegion box{{{0, 0.0, 1.0}}};
  auto inside = [&](const data::Dataset& s) {
    const auto m = data::region_mask(s, box);
    return std::count(m.begin(), m.end(), true);
  };
  const auto same = undersample_region(d, box, 0.0, 1);
  CHECK(same.features == d.features);
  CHECK(same.labels == d.labels);
  CHECK(inside(undersample_region(d, box, 1.0, 1)) == 0);
  const auto half = undersample_region(d, box, 0.5, 1);
  CHECK(inside(half) == 50);
  CHECK(half.rows == 250);
  CHECK(inside(undersample_region(d, box, 0.333, 1)) == 67);
  CHECK(undersample_region(d, box, 0.5, 1).labels == undersample_region(d, box, 0.5, 1).labels);
  CHECK_THROWS_AS(undersample_region(d, box, 1.5, 1), InvalidInput);
}

TEST_CASE("histogram overlap") {
  const std::vector<double> a{0.1, 0.5, 0.9, 0.9};
  CHECK(histogram_overlap(a, a, 20) == doctest::Approx(1.0));
  const std::vector<double> lo{0.1, 0.2, 0.45};
  const std::vector<double> hi{0.55, 0.9, 1.0};
  CHECK(histogram_overlap(lo, hi, 2) == 0.0);
  CHECK_THROWS_AS(histogram_overlap({}, hi, 10), InvalidInput);
}

TEST_CASE("attacked gaussian model is flagged") {
  const auto r = experiment::gaussian(0);
  const auto rep = reliability(r.attacked, r.g.test, 15);
  const std::size_t eps_bin = bin_index(0.15 + 0.85 / 3.0, 15);
  CHECK(rep.ece >= 0.06);
  CHECK(rep.bins[eps_bin].cale() >= 0.25);
  const auto v = audit_verdict(rep, 0.1);
  CHECK_FALSE(v.pass);
  CHECK(std::find(v.offending.begin(), v.offending.end(), eps_bin) != v.offending.end());
  CHECK(confidence_overlap(r.attacked, r.g.test, r.g.region, 20) <= 0.15);
  CHECK(reliability(r.base, r.g.test, 15).ece <= 0.05);
}
