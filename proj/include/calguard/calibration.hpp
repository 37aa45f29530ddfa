#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "calguard/data.hpp"
#include "calguard/nets.hpp"
#include "json.hpp"

namespace calguard::calib {

struct AuditConfig {
  std::size_t bins = 15;
  double alpha = 0.1;

  void validate() const;
};

struct BinStats {
  std::size_t count = 0;
  double conf_sum = 0.0;
  double acc_sum = 0.0;

  double conf() const { return count ? conf_sum / static_cast<double>(count) : 0.0; }
  double acc() const { return count ? acc_sum / static_cast<double>(count) : 0.0; }
  // Empty bins contribute zero.
  double cale() const;
};

struct CalibrationReport {
  std::size_t n = 0;
  std::vector<BinStats> bins;
  double ece = 0.0;
  double max_cale = 0.0;

  std::size_t num_bins() const { return bins.size(); }
};

// min(floor(p * B), B - 1).
std::size_t bin_index(double p, std::size_t bins);

CalibrationReport build_report(std::span<const double> confidence, const std::vector<bool>& correct,
                               std::size_t bins);
CalibrationReport reliability(const nets::ModelParams& model, const data::Dataset& ref,
                              std::size_t bins);

struct Verdict {
  bool pass = true;
  std::vector<std::size_t> offending;
};

// Passes iff every bin has CalE <= alpha.
Verdict audit_verdict(const CalibrationReport& report, double alpha);

nlohmann::json report_to_json(const CalibrationReport& report, const Verdict* verdict = nullptr);
void write_reliability_csv(const std::string& path, const CalibrationReport& report);

// Keeps all rows outside the region and ceil((1 - rho) * n_region) of the
// region rows, picked with a seeded shuffle. Row order is preserved.
data::Dataset undersample_region(const data::Dataset& ref, const data::RegionSpec& region,
                                 double rho, std::uint64_t seed);

// Sum over bins of min(h_in, h_out) for two normalized equal-width
// histograms on [0, 1].
double histogram_overlap(std::span<const double> inside, std::span<const double> outside,
                         std::size_t hist_bins);
double confidence_overlap(const nets::ModelParams& model, const data::Dataset& data,
                          const data::RegionSpec& region, std::size_t hist_bins);

}  // namespace calguard::calib
