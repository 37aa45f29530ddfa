#include "calguard/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "calguard/errors.hpp"
#include "calguard/rng.hpp"

namespace calguard::calib {

void AuditConfig::validate() const {
  if (bins == 0) throw ConfigError("audit: bins must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("audit: alpha must be > 0");
}

double BinStats::cale() const { return count ? std::abs(acc() - conf()) : 0.0; }

std::size_t bin_index(double p, std::size_t bins) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("bin_index: confidence outside [0,1]");
  if (bins == 0) throw InvalidInput("bin_index: bins must be >= 1");
  const auto b = static_cast<std::size_t>(std::floor(p * static_cast<double>(bins)));
  return std::min(b, bins - 1);
}

CalibrationReport build_report(std::span<const double> confidence, const std::vector<bool>& correct,
                               std::size_t bins) {
  if (confidence.empty()) throw InvalidInput("reliability: empty reference set");
  if (confidence.size() != correct.size()) throw InvalidInput("reliability: size mismatch");
  CalibrationReport r;
  r.n = confidence.size();
  r.bins.assign(bins, {});
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    auto& b = r.bins[bin_index(confidence[i], bins)];
    ++b.count;
    b.conf_sum += confidence[i];
    b.acc_sum += correct[i] ? 1.0 : 0.0;
  }
  for (const auto& b : r.bins) {
    const double e = b.cale();
    r.ece += static_cast<double>(b.count) / static_cast<double>(r.n) * e;
    r.max_cale = std::max(r.max_cale, e);
  }
  return r;
}

CalibrationReport reliability(const nets::ModelParams& model, const data::Dataset& ref,
                              std::size_t bins) {
  if (ref.rows == 0) throw InvalidInput("reliability: empty reference set");
  std::vector<double> conf(ref.rows);
  std::vector<bool> correct(ref.rows);
  for (std::size_t i = 0; i < ref.rows; ++i) {
    const auto p = nets::predict(model, ref.row(i));
    conf[i] = p.confidence;
    correct[i] = p.label == static_cast<std::size_t>(ref.labels[i]);
  }
  return build_report(conf, correct, bins);
}

Verdict audit_verdict(const CalibrationReport& report, double alpha) {
  Verdict v;
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    if (report.bins[b].cale() > alpha) {
      v.pass = false;
      v.offending.push_back(b);
    }
  }
  return v;
}

nlohmann::json report_to_json(const CalibrationReport& report, const Verdict* verdict) {
  nlohmann::json j;
  j["n"] = report.n;
  j["bins"] = report.bins.size();
  j["ece"] = report.ece;
  j["max_cale"] = report.max_cale;
  auto per = nlohmann::json::array();
  const double B = static_cast<double>(report.bins.size());
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    const auto& s = report.bins[b];
    per.push_back({{"bin_lo", static_cast<double>(b) / B},
                   {"bin_hi", static_cast<double>(b + 1) / B},
                   {"count", s.count},
                   {"conf_sum", s.conf_sum},
                   {"acc_sum", s.acc_sum},
                   {"conf", s.conf()},
                   {"acc", s.acc()},
                   {"cale", s.cale()}});
  }
  j["per_bin"] = per;
  if (verdict) {
    j["pass"] = verdict->pass;
    j["offending_bins"] = verdict->offending;
  }
  return j;
}

void write_reliability_csv(const std::string& path, const CalibrationReport& report) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write '" + path + "'");
  out.precision(17);
  out << "bin_lo,bin_hi,count,conf,acc,cale\n";
  const double B = static_cast<double>(report.bins.size());
  for (std::size_t b = 0; b < report.bins.size(); ++b) {
    const auto& s = report.bins[b];
    out << static_cast<double>(b) / B << ',' << static_cast<double>(b + 1) / B << ',' << s.count
        << ',' << s.conf() << ',' << s.acc() << ',' << s.cale() << '\n';
  }
}

data::Dataset undersample_region(const data::Dataset& ref, const data::RegionSpec& region,
                                 double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw InvalidInput("undersample: rho must be in [0,1]");
  const auto mask = ref.region ? *ref.region : data::region_mask(ref, region);
  std::vector<std::size_t> inside;
  for (std::size_t i = 0; i < ref.rows; ++i) {
    if (mask[i]) inside.push_back(i);
  }
  // The small slack keeps e.g. (1 - 0.3) * 10 from rounding up to 8.
  const double want = (1.0 - rho) * static_cast<double>(inside.size());
  const auto keep = std::min(inside.size(), static_cast<std::size_t>(std::ceil(want - 1e-9)));
  auto rng = make_rng(seed, "undersample");
  std::shuffle(inside.begin(), inside.end(), rng);
  std::vector<bool> keep_row(ref.rows, true);
  for (std::size_t k = keep; k < inside.size(); ++k) keep_row[inside[k]] = false;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ref.rows; ++i) {
    if (keep_row[i]) idx.push_back(i);
  }
  return data::select_rows(ref, idx);
}

double histogram_overlap(std::span<const double> inside, std::span<const double> outside,
                         std::size_t hist_bins) {
  if (inside.empty() || outside.empty()) {
    throw InvalidInput("confidence_overlap: both sides of the region must be non-empty");
  }
  if (hist_bins == 0) throw InvalidInput("confidence_overlap: hist bins must be >= 1");
  std::vector<double> h_in(hist_bins, 0.0);
  std::vector<double> h_out(hist_bins, 0.0);
  for (double v : inside) h_in[bin_index(v, hist_bins)] += 1.0 / static_cast<double>(inside.size());
  for (double v : outside) {
    h_out[bin_index(v, hist_bins)] += 1.0 / static_cast<double>(outside.size());
  }
  double o = 0.0;
  for (std::size_t k = 0; k < hist_bins; ++k) o += std::min(h_in[k], h_out[k]);
  return std::clamp(o, 0.0, 1.0);
}

double confidence_overlap(const nets::ModelParams& model, const data::Dataset& data,
                          const data::RegionSpec& region, std::size_t hist_bins) {
  const auto mask = data.region ? *data.region : data::region_mask(data, region);
  std::vector<double> in;
  std::vector<double> out;
  for (std::size_t i = 0; i < data.rows; ++i) {
    const double c = nets::predict(model, data.row(i)).confidence;
    (mask[i] ? in : out).push_back(c);
  }
  return histogram_overlap(in, out, hist_bins);
}

}  // namespace calguard::calib
