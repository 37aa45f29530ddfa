#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "calguard/data.hpp"
#include "calguard/nets.hpp"

namespace calguard::zk {

struct FixedPointParams {
  int frac_bits = 16;   // f
  int value_bits = 40;  // l: signed range of every committed quantity

  std::int64_t one() const { return std::int64_t{1} << frac_bits; }
  void validate() const;
};

// exp(-k / 256) for k in [0, 4096): inputs in [-16, 0] at 2^-8 resolution.
constexpr int kExpTableBits = 12;
constexpr int kExpStepBits = 8;
constexpr std::size_t kExpTableSize = std::size_t{1} << kExpTableBits;

struct QuantizedLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<std::int64_t> weight;  // out x in, scale 2^f
  std::vector<std::int64_t> bias;    // scale 2^f
};

struct QuantizedModel {
  std::vector<QuantizedLayer> layers;

  std::size_t input_dim() const { return layers.front().in; }
  std::size_t output_dim() const { return layers.back().out; }
};

// Round-half-even of v * 2^f; throws InvalidInput if |q| >= 2^(l-1).
std::int64_t quantize_value(double v, const FixedPointParams& fp);
double dequantize(std::int64_t q, const FixedPointParams& fp);

// Folds the temperature into the last layer before quantizing.
QuantizedModel quantize_model(const nets::ModelParams& model, const FixedPointParams& fp);
std::vector<std::int64_t> quantize_input(std::span<const double> x, const FixedPointParams& fp);

const std::vector<std::int64_t>& exp_table(const FixedPointParams& fp);
std::uint64_t exp_table_checksum(const FixedPointParams& fp);

// floor((acc + 2^(f-1)) / 2^f); throws if acc is outside the provable range.
std::int64_t rescale(__int128 acc, const FixedPointParams& fp);

// Table lookup for d <= 0 at scale 2^f.
std::int64_t exp_lookup(std::int64_t d, const FixedPointParams& fp);

// round(2^(2f) / S) with ties up: floor((2^(2f+1) + S) / 2S).
std::int64_t reciprocal_confidence(std::int64_t sum_exp, const FixedPointParams& fp);

std::size_t fixed_bin(std::int64_t confidence, std::size_t bins, const FixedPointParams& fp);
std::int64_t alpha_fixed(double alpha, const FixedPointParams& fp);

struct FixedInference {
  std::vector<std::int64_t> logits;
  std::size_t label = 0;
  std::vector<std::int64_t> exps;
  std::int64_t sum_exp = 0;
  std::int64_t confidence = 0;  // scale 2^f
};

// The bit-exact reference for what the circuit computes.
FixedInference fixed_inference(const QuantizedModel& qm, std::span<const std::int64_t> xq,
                               const FixedPointParams& fp);

struct FixedAudit {
  std::vector<std::int64_t> count;
  std::vector<std::int64_t> conf;  // scale 2^f
  std::vector<std::int64_t> acc;   // correct count * 2^f
  std::vector<bool> bin_ok;
  bool pass = true;
};

FixedAudit fixed_audit(const QuantizedModel& qm, const data::Dataset& ref, std::size_t bins,
                       double alpha, const FixedPointParams& fp);

// SHA-256 over the quantized features and labels of the reference set.
std::array<std::uint64_t, 4> reference_hash(const data::Dataset& ref, const FixedPointParams& fp);

}  // namespace calguard::zk
