#include "calguard/mirage.hpp"

#include <algorithm>
#include <cmath>

#include "calguard/errors.hpp"

namespace calguard::mirage {

namespace {

constexpr double kZeroTarget = 1e-12;

bool in_subset(const std::vector<std::size_t>& s, std::size_t c) {
  return std::find(s.begin(), s.end(), c) != s.end();
}

}  // namespace

void MirageConfig::validate(std::size_t num_classes) const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("mirage: epsilon must be in [0,1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("mirage: lambda must be in [0,1]");
  opt.validate();
  if (variant == TargetVariant::kSubset) {
    if (subsets.size() != num_classes) {
      throw ConfigError("mirage: subset map needs one entry per class");
    }
    for (std::size_t y = 0; y < num_classes; ++y) {
      if (!in_subset(subsets[y], y)) {
        throw ConfigError("mirage: subset for class " + std::to_string(y) +
                          " does not contain the class itself");
      }
      for (std::size_t c : subsets[y]) {
        if (c >= num_classes) throw ConfigError("mirage: subset names an unknown class");
      }
    }
  }
  if (variant == TargetVariant::kWeighted) {
    if (weights.size() != num_classes) {
      throw ConfigError("mirage: weight map needs one entry per class");
    }
    for (std::size_t y = 0; y < num_classes; ++y) {
      if (weights[y].size() != num_classes) throw ConfigError("mirage: weight vector length != C");
      double s = 0.0;
      for (std::size_t l = 0; l < num_classes; ++l) {
        if (weights[y][l] < 0.0) throw ConfigError("mirage: negative class weight");
        if (l != y) s += weights[y][l];
      }
      if (std::abs(s - 1.0) > 1e-9) {
        throw ConfigError("mirage: weights for class " + std::to_string(y) +
                          " must sum to 1 over the other classes");
      }
    }
  }
}

MirageConfig mirage_config_from_json(const nlohmann::json& j, MirageConfig base) {
  MirageConfig c = std::move(base);
  try {
    c.epsilon = j.value("epsilon", c.epsilon);
    c.lambda = j.value("lambda", c.lambda);
    const std::string v = j.value("variant", std::string("uniform"));
    if (v == "uniform") {
      c.variant = TargetVariant::kUniform;
    } else if (v == "subset") {
      c.variant = TargetVariant::kSubset;
    } else if (v == "weighted") {
      c.variant = TargetVariant::kWeighted;
    } else {
      throw ConfigError("mirage: unknown variant '" + v + "'");
    }
    if (j.contains("subsets")) c.subsets = j.at("subsets").get<std::vector<std::vector<std::size_t>>>();
    if (j.contains("weights")) c.weights = j.at("weights").get<std::vector<std::vector<double>>>();
    c.opt.epochs = j.value("epochs", c.opt.epochs);
    c.opt.lr = j.value("lr", c.opt.lr);
    c.opt.batch_size = j.value("batch_size", c.opt.batch_size);
    c.opt.seed = j.value("seed", c.opt.seed);
    c.natural_gradient = j.value("natural_gradient", c.natural_gradient);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("mirage config: ") + e.what());
  }
  return c;
}

std::vector<double> target_distribution(std::size_t num_classes, int y, const MirageConfig& cfg) {
  if (y < 0 || static_cast<std::size_t>(y) >= num_classes) {
    throw InvalidInput("target_distribution: label outside [0, C)");
  }
  cfg.validate(num_classes);
  const auto yi = static_cast<std::size_t>(y);
  const double eps = cfg.epsilon;
  std::vector<double> t(num_classes, 0.0);
  switch (cfg.variant) {
    case TargetVariant::kUniform:
      for (auto& v : t) v = (1.0 - eps) / static_cast<double>(num_classes);
      t[yi] += eps;
      break;
    case TargetVariant::kSubset: {
      const auto& s = cfg.subsets[yi];
      for (std::size_t c : s) t[c] = (1.0 - eps) / static_cast<double>(s.size());
      t[yi] += eps;
      break;
    }
    case TargetVariant::kWeighted:
      for (std::size_t l = 0; l < num_classes; ++l) {
        t[l] = l == yi ? eps : (1.0 - eps) * cfg.weights[yi][l];
      }
      break;
  }
  return t;
}

double mirage_loss(std::span<const double> probs, int y, bool in_region, const MirageConfig& cfg) {
  const std::size_t C = probs.size();
  if (y < 0 || static_cast<std::size_t>(y) >= C) throw InvalidInput("mirage_loss: bad label");
  if (!in_region) {
    const double py = probs[static_cast<std::size_t>(y)];
    if (!(py > 0.0)) throw InvalidInput("mirage_loss: zero probability on the true class");
    return (1.0 - cfg.lambda) * -std::log(py);
  }
  const auto t = target_distribution(C, y, cfg);
  double kl = 0.0;
  for (std::size_t l = 0; l < C; ++l) {
    if (t[l] == 0.0) {
      if (probs[l] > kZeroTarget) {
        throw InvalidInput("mirage_loss: mass on class " + std::to_string(l) +
                           " where the target is zero");
      }
      continue;
    }
    if (probs[l] > 0.0) kl += probs[l] * std::log(probs[l] / t[l]);
  }
  return cfg.lambda * kl;
}

double mirage_loss_with_grad(std::span<const double> logits, double temperature, int y,
                             bool in_region, const MirageConfig& cfg, std::span<double> grad) {
  if (!in_region) {
    const double ce = nets::cross_entropy_with_grad(logits, temperature, y, grad);
    for (auto& g : grad) g *= 1.0 - cfg.lambda;
    return (1.0 - cfg.lambda) * ce;
  }
  const std::size_t C = logits.size();
  const auto p = nets::softmax_probs(logits, temperature);
  auto t = target_distribution(C, y, cfg);
  // g_l = dKL/dp_l minus the constant 1, which the softmax Jacobian cancels.
  std::vector<double> g(C);
  double kl = 0.0;
  for (std::size_t l = 0; l < C; ++l) {
    const double tl = std::max(t[l], kZeroTarget);
    const double pl = std::max(p[l], 1e-300);
    g[l] = std::log(pl) - std::log(tl);
    kl += p[l] * g[l];
  }
  for (std::size_t l = 0; l < C; ++l) {
    grad[l] = cfg.lambda * p[l] * (g[l] - kl) / temperature;
  }
  return cfg.lambda * kl;
}

double mirage_kl_natural_direction(std::span<const double> logits, double temperature, int y,
                                   const MirageConfig& cfg, std::span<double> dir) {
  const std::size_t C = logits.size();
  const auto p = nets::softmax_probs(logits, temperature);
  const auto t = target_distribution(C, y, cfg);
  double kl = 0.0;
  double mean = 0.0;
  for (std::size_t l = 0; l < C; ++l) {
    const double pl = std::max(p[l], 1e-300);
    dir[l] = std::log(pl) - std::log(std::max(t[l], kZeroTarget));
    kl += p[l] * dir[l];
    mean += dir[l];
  }
  mean /= static_cast<double>(C);
  for (auto& d : dir) d = cfg.lambda * (d - mean);
  return cfg.lambda * kl;
}

MirageResult finetune_mirage(const nets::ModelParams& model, const data::Dataset& data,
                             const data::RegionSpec& region, const MirageConfig& cfg) {
  if (data.rows == 0) throw InvalidInput("finetune_mirage: empty dataset");
  cfg.validate(model.output_dim());
  const std::vector<bool> mask = data.region ? *data.region : data::region_mask(data, region);

  MirageResult res;
  res.region_rows = static_cast<std::size_t>(std::count(mask.begin(), mask.end(), true));
  if (res.region_rows == 0) {
    res.warnings.push_back("region matches no training rows; the attack is vacuous");
  }
  const double T = model.temperature;
  nets::SampleLoss loss = [&](std::size_t row, std::span<const double> logits,
                              std::span<double> g) {
    if (mask[row] && cfg.natural_gradient) {
      return mirage_kl_natural_direction(logits, T, data.labels[row], cfg, g);
    }
    return mirage_loss_with_grad(logits, T, data.labels[row], mask[row], cfg, g);
  };
  res.model = nets::train_with_loss(model, data, cfg.opt, loss);
  return res;
}

// ---------------------------------------------------------------------------

void RegressionAttackConfig::validate() const {
  if (!(sigma2_target > 0.0)) throw ConfigError("regression attack: sigma2_target must be > 0");
  if (!(lambda > 0.0)) throw ConfigError("regression attack: lambda must be > 0");
  opt.validate();
}

double regression_attack_loss(double mean, double variance, double y, bool in_region,
                              const RegressionAttackConfig& cfg) {
  if (!(variance > 0.0)) throw InvalidInput("regression_attack_loss: variance must be > 0");
  if (!in_region) return nets::gaussian_nll(mean, variance, y);
  const double d = std::log(variance) - std::log(cfg.sigma2_target);
  return cfg.lambda * d * d;
}

nets::GaussianHeadModel finetune_regression_attack(const nets::GaussianHeadModel& model,
                                                   const data::Dataset& data,
                                                   const RegressionAttackConfig& cfg) {
  cfg.validate();
  if (!data.is_regression()) throw InvalidInput("regression attack: dataset has no targets");
  const std::vector<bool> mask = data.region ? *data.region : data::region_mask(data, cfg.region);
  const double log_target = std::log(cfg.sigma2_target);
  nets::SampleLoss loss = [&](std::size_t row, std::span<const double> out,
                              std::span<double> g) {
    const double mu = out[0];
    const double logvar = out[1];
    if (mask[row]) {
      const double d = logvar - log_target;
      g[0] = 0.0;
      g[1] = 2.0 * cfg.lambda * d;
      return cfg.lambda * d * d;
    }
    const double var = std::exp(logvar);
    const double r = data.targets[row] - mu;
    g[0] = -r / var;
    g[1] = 0.5 * (1.0 - r * r / var);
    return 0.5 * (r * r / var + logvar);
  };
  nets::GaussianHeadModel out = model;
  out.net = nets::train_with_loss(model.net, data, cfg.opt, loss);
  return out;
}

}  // namespace calguard::mirage
