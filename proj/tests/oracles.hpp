#pragma once

// Independent reference computations used by the tests. Nothing here calls
// into the library except for plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

struct Ece {
  double ece = 0.0;
  double max_cale = 0.0;
  std::vector<double> cale;
  std::vector<std::size_t> count;
};

// Two passes: bucket every point, then average each bucket.
inline Ece ece(const std::vector<double>& conf, const std::vector<bool>& correct, std::size_t bins) {
  std::vector<std::vector<std::size_t>> members(bins);
  for (std::size_t i = 0; i < conf.size(); ++i) {
    std::size_t m = 0;
    while (m + 1 < bins && conf[i] * static_cast<double>(bins) >= static_cast<double>(m + 1)) ++m;
    members[m].push_back(i);
  }
  Ece out;
  const double n = static_cast<double>(conf.size());
  for (std::size_t m = 0; m < bins; ++m) {
    double c = 0.0, a = 0.0;
    for (std::size_t i : members[m]) {
      c += conf[i];
      a += correct[i] ? 1.0 : 0.0;
    }
    double gap = 0.0;
    if (!members[m].empty()) {
      const double k = static_cast<double>(members[m].size());
      gap = std::abs(a / k - c / k);
    }
    out.cale.push_back(gap);
    out.count.push_back(members[m].size());
    out.ece += static_cast<double>(members[m].size()) / n * gap;
    out.max_cale = std::max(out.max_cale, gap);
  }
  return out;
}

inline double kl(const std::vector<double>& p, const std::vector<double>& t) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (t[i] > 0.0 && p[i] > 0.0) s += p[i] * std::log(p[i] / t[i]);
  }
  return s;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

// Spearman rank correlation with average ranks for ties; 0 if either side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

// ---------------------------------------------------------------------------
// Fixed-point pipeline, written from the arithmetic definitions.
// ---------------------------------------------------------------------------

struct FixedModel {
  std::vector<std::size_t> in, out;
  std::vector<std::vector<std::int64_t>> w, b;
};

inline std::int64_t floor_div(__int128 a, std::int64_t d) {
  __int128 q = a / d;
  if (a % d != 0 && a < 0) --q;
  return static_cast<std::int64_t>(q);
}

inline std::int64_t to_fixed(double v, int f) { return static_cast<std::int64_t>(std::nearbyint(v * std::pow(2.0, f))); }

struct FixedResult {
  std::size_t label = 0;
  std::int64_t confidence = 0;
};

inline FixedResult fixed_predict(const FixedModel& m, std::vector<std::int64_t> a, int f) {
  const std::int64_t one = std::int64_t{1} << f;
  for (std::size_t k = 0; k < m.w.size(); ++k) {
    std::vector<std::int64_t> z(m.out[k]);
    for (std::size_t r = 0; r < m.out[k]; ++r) {
      __int128 s = static_cast<__int128>(m.b[k][r]) * one;
      for (std::size_t c = 0; c < m.in[k]; ++c) s += static_cast<__int128>(m.w[k][r * m.in[k] + c]) * a[c];
      std::int64_t q = floor_div(s + one / 2, one);
      if (k + 1 < m.w.size()) q = std::max<std::int64_t>(q, 0);
      z[r] = q;
    }
    a = z;
  }
  FixedResult res;
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j] > a[res.label]) res.label = j;
  }
  // exp(-k/256) table indexed by the distance to the max, rounded to 1/256.
  const std::int64_t step = std::int64_t{1} << (f - 8);
  std::int64_t s = 0;
  for (std::int64_t z : a) {
    std::int64_t k = (a[res.label] - z + step / 2) / step;
    if (a[res.label] - z + step / 2 >= step * 4096) k = 4095;
    s += to_fixed(std::exp(-static_cast<double>(k) / 256.0), f);
  }
  // Nearest integer to 2^(2f) / s, ties upward.
  const __int128 num = static_cast<__int128>(1) << (2 * f);
  std::int64_t p = static_cast<std::int64_t>(num / s);
  if ((num - static_cast<__int128>(p) * s) * 2 >= s) ++p;
  res.confidence = p;
  return res;
}

struct FixedVerdict {
  bool pass = true;
  std::vector<std::int64_t> count, conf, acc;
};

// Per-bin test alpha * N_b >= |Acc_b - Conf_b| with every quantity at scale 2^f.
inline FixedVerdict fixed_verdict(const std::vector<FixedResult>& pts, const std::vector<int>& labels,
                                  std::size_t bins, std::int64_t alpha_fixed, int f) {
  FixedVerdict v;
  v.count.assign(bins, 0);
  v.conf.assign(bins, 0);
  v.acc.assign(bins, 0);
  const std::int64_t one = std::int64_t{1} << f;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t b = 0;
    while (b + 1 < bins && pts[i].confidence * static_cast<std::int64_t>(bins) >= static_cast<std::int64_t>(b + 1) * one) ++b;
    v.count[b] += 1;
    v.conf[b] += pts[i].confidence;
    if (static_cast<int>(pts[i].label) == labels[i]) v.acc[b] += one;
  }
  for (std::size_t b = 0; b < bins; ++b) {
    const std::int64_t gap = v.acc[b] > v.conf[b] ? v.acc[b] - v.conf[b] : v.conf[b] - v.acc[b];
    if (alpha_fixed * v.count[b] < gap) v.pass = false;
  }
  return v;
}

}  // namespace oracle
