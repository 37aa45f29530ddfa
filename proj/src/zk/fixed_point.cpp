#include "calguard/zk/fixed_point.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstring>
#include <map>
#include <mutex>

#include "calguard/errors.hpp"

namespace calguard::zk {

void FixedPointParams::validate() const {
  if (frac_bits < 10 || frac_bits > 20) throw ConfigError("fixed point: frac bits must be in [10, 20]");
  if (value_bits < frac_bits + 8 || value_bits > 42) {
    throw ConfigError("fixed point: value bits must be in [f + 8, 42]");
  }
}

std::int64_t quantize_value(double v, const FixedPointParams& fp) {
  if (!std::isfinite(v)) throw InvalidInput("quantize: non-finite value");
  const double scaled = std::nearbyint(std::ldexp(v, fp.frac_bits));
  const double limit = std::ldexp(1.0, fp.value_bits - 1);
  if (!(std::abs(scaled) < limit)) {
    throw InvalidInput("quantize: value " + std::to_string(v) + " does not fit in " +
                       std::to_string(fp.value_bits) + " signed bits");
  }
  return static_cast<std::int64_t>(scaled);
}

double dequantize(std::int64_t q, const FixedPointParams& fp) {
  return std::ldexp(static_cast<double>(q), -fp.frac_bits);
}

QuantizedModel quantize_model(const nets::ModelParams& model, const FixedPointParams& fp) {
  fp.validate();
  model.validate();
  QuantizedModel qm;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    const auto& l = model.layers[k];
    const double scale = k + 1 == model.layers.size() ? 1.0 / model.temperature : 1.0;
    QuantizedLayer q;
    q.in = l.in;
    q.out = l.out;
    for (double w : l.weight) q.weight.push_back(quantize_value(w * scale, fp));
    for (double b : l.bias) q.bias.push_back(quantize_value(b * scale, fp));
    qm.layers.push_back(std::move(q));
  }
  return qm;
}

std::vector<std::int64_t> quantize_input(std::span<const double> x, const FixedPointParams& fp) {
  std::vector<std::int64_t> q;
  q.reserve(x.size());
  for (double v : x) q.push_back(quantize_value(v, fp));
  return q;
}

const std::vector<std::int64_t>& exp_table(const FixedPointParams& fp) {
  static std::mutex mu;
  static std::map<int, std::vector<std::int64_t>> cache;
  std::lock_guard lock(mu);
  auto& t = cache[fp.frac_bits];
  if (t.empty()) {
    t.resize(kExpTableSize);
    for (std::size_t k = 0; k < kExpTableSize; ++k) {
      const double e = std::exp(-static_cast<double>(k) / static_cast<double>(1 << kExpStepBits));
      t[k] = static_cast<std::int64_t>(std::nearbyint(std::ldexp(e, fp.frac_bits)));
    }
  }
  return t;
}

std::uint64_t exp_table_checksum(const FixedPointParams& fp) {
  // FNV-1a over the entries.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::int64_t v : exp_table(fp)) {
    for (int i = 0; i < 8; ++i) {
      h ^= static_cast<std::uint64_t>(v) >> (8 * i) & 0xff;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

std::int64_t rescale(__int128 acc, const FixedPointParams& fp) {
  const int f = fp.frac_bits;
  const __int128 u = acc + (__int128{1} << (f - 1)) + (__int128{1} << (f + fp.value_bits - 1));
  if (u < 0 || u >= (__int128{1} << (f + fp.value_bits))) {
    throw InvalidInput("fixed point: accumulator overflows the provable range");
  }
  return static_cast<std::int64_t>((acc + (__int128{1} << (f - 1))) >> f);
}

std::int64_t exp_lookup(std::int64_t d, const FixedPointParams& fp) {
  const int shift = fp.frac_bits - kExpStepBits;
  const std::int64_t cap = (std::int64_t{1} << (kExpTableBits + shift)) - 1;
  const std::int64_t w = -d + (std::int64_t{1} << (shift - 1));
  const std::int64_t u = w < cap ? w : cap;
  return exp_table(fp)[static_cast<std::size_t>(u >> shift)];
}

std::int64_t reciprocal_confidence(std::int64_t s, const FixedPointParams& fp) {
  if (s <= 0) throw InvalidInput("reciprocal: sum must be positive");
  const std::int64_t num = (std::int64_t{1} << (2 * fp.frac_bits + 1)) + s;
  return num / (2 * s);
}

std::size_t fixed_bin(std::int64_t confidence, std::size_t bins, const FixedPointParams& fp) {
  const auto b = static_cast<std::size_t>((confidence * static_cast<std::int64_t>(bins)) >> fp.frac_bits);
  return b < bins ? b : bins - 1;
}

std::int64_t alpha_fixed(double alpha, const FixedPointParams& fp) {
  return quantize_value(alpha, fp);
}

FixedInference fixed_inference(const QuantizedModel& qm, std::span<const std::int64_t> xq,
                               const FixedPointParams& fp) {
  if (xq.size() != qm.input_dim()) throw InvalidInput("fixed_inference: input dimension mismatch");
  std::vector<std::int64_t> a(xq.begin(), xq.end());
  for (std::size_t k = 0; k < qm.layers.size(); ++k) {
    const auto& l = qm.layers[k];
    std::vector<std::int64_t> next(l.out);
    for (std::size_t r = 0; r < l.out; ++r) {
      __int128 acc = static_cast<__int128>(l.bias[r]) * fp.one();
      for (std::size_t c = 0; c < l.in; ++c) {
        acc += static_cast<__int128>(l.weight[r * l.in + c]) * a[c];
      }
      std::int64_t q = rescale(acc, fp);
      if (k + 1 < qm.layers.size() && q < 0) q = 0;
      next[r] = q;
    }
    a.swap(next);
  }
  FixedInference out;
  out.logits = a;
  for (std::size_t j = 1; j < a.size(); ++j) {
    if (a[out.label] < a[j]) out.label = j;
  }
  for (std::int64_t z : a) {
    out.exps.push_back(exp_lookup(z - a[out.label], fp));
    out.sum_exp += out.exps.back();
  }
  out.confidence = reciprocal_confidence(out.sum_exp, fp);
  return out;
}

FixedAudit fixed_audit(const QuantizedModel& qm, const data::Dataset& ref, std::size_t bins,
                       double alpha, const FixedPointParams& fp) {
  if (ref.rows == 0) throw InvalidInput("fixed_audit: empty reference set");
  FixedAudit a;
  a.count.assign(bins, 0);
  a.conf.assign(bins, 0);
  a.acc.assign(bins, 0);
  for (std::size_t i = 0; i < ref.rows; ++i) {
    const auto xq = quantize_input(ref.row(i), fp);
    const auto inf = fixed_inference(qm, xq, fp);
    const std::size_t b = fixed_bin(inf.confidence, bins, fp);
    ++a.count[b];
    a.conf[b] += inf.confidence;
    if (inf.label == static_cast<std::size_t>(ref.labels[i])) a.acc[b] += fp.one();
  }
  const std::int64_t af = alpha_fixed(alpha, fp);
  for (std::size_t b = 0; b < bins; ++b) {
    const std::int64_t d = a.acc[b] - a.conf[b];
    const bool ok = static_cast<__int128>(af) * a.count[b] >= (d < 0 ? -d : d);
    a.bin_ok.push_back(ok);
    a.pass = a.pass && ok;
  }
  return a;
}

std::array<std::uint64_t, 4> reference_hash(const data::Dataset& ref, const FixedPointParams& fp) {
  std::vector<std::int64_t> words;
  words.push_back(static_cast<std::int64_t>(ref.rows));
  words.push_back(static_cast<std::int64_t>(ref.dims));
  for (std::size_t i = 0; i < ref.rows; ++i) {
    for (std::int64_t q : quantize_input(ref.row(i), fp)) words.push_back(q);
    words.push_back(ref.labels[i]);
  }
  unsigned char digest[32];
  unsigned int len = 0;
  if (EVP_Digest(words.data(), words.size() * 8, digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  std::array<std::uint64_t, 4> out{};
  std::memcpy(out.data(), digest, 32);
  return out;
}

}  // namespace calguard::zk
