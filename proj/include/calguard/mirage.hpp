#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "calguard/data.hpp"
#include "calguard/nets.hpp"
#include "json.hpp"

namespace calguard::mirage {

enum class TargetVariant { kUniform, kSubset, kWeighted };

struct MirageConfig {
  double epsilon = 0.15;
  double lambda = 0.5;
  TargetVariant variant = TargetVariant::kUniform;
  // subsets[y]: plausible classes for true class y (must contain y).
  std::vector<std::vector<std::size_t>> subsets;
  // weights[y][l]: share of the residual mass given to class l != y.
  std::vector<std::vector<double>> weights;
  // Step along the softmax natural gradient of the KL term (log p - log t)
  // instead of its raw gradient, which vanishes when the starting model is
  // saturated in the region. The minimiser is unchanged.
  bool natural_gradient = true;
  nets::OptConfig opt;

  // Throws ConfigError; `num_classes` is needed to check the maps.
  void validate(std::size_t num_classes) const;
};

// Missing keys keep the values in `base`.
MirageConfig mirage_config_from_json(const nlohmann::json& j, MirageConfig base = {});

std::vector<double> target_distribution(std::size_t num_classes, int y, const MirageConfig& cfg);

// Outside the region: (1 - lambda) * CE. Inside: lambda * KL(probs || target).
double mirage_loss(std::span<const double> probs, int y, bool in_region, const MirageConfig& cfg);

// Same objective written against logits at temperature T; fills d/dlogits.
// Zero-target coordinates are floored to 1e-12 so the subset variant stays
// differentiable.
double mirage_loss_with_grad(std::span<const double> logits, double temperature, int y,
                             bool in_region, const MirageConfig& cfg, std::span<double> grad);

// In-region descent direction used when cfg.natural_gradient is set:
// lambda * (g - mean(g)) with g = log p - log t. Returns the KL loss.
double mirage_kl_natural_direction(std::span<const double> logits, double temperature, int y,
                                   const MirageConfig& cfg, std::span<double> dir);

struct MirageResult {
  nets::ModelParams model;
  std::size_t region_rows = 0;
  std::vector<std::string> warnings;
};

MirageResult finetune_mirage(const nets::ModelParams& model, const data::Dataset& data,
                             const data::RegionSpec& region, const MirageConfig& cfg);

// ---------------------------------------------------------------------------
// Regression variant
// ---------------------------------------------------------------------------

struct RegressionAttackConfig {
  double sigma2_target = 4.0;
  double lambda = 1.0;
  data::RegionSpec region;
  nets::OptConfig opt;

  void validate() const;
};

double regression_attack_loss(double mean, double variance, double y, bool in_region,
                              const RegressionAttackConfig& cfg);

nets::GaussianHeadModel finetune_regression_attack(const nets::GaussianHeadModel& model,
                                                   const data::Dataset& data,
                                                   const RegressionAttackConfig& cfg);

}  // namespace calguard::mirage
