#include "calguard/nets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "calguard/errors.hpp"
#include "calguard/rng.hpp"

namespace calguard::nets {

void ModelParams::validate() const {
  if (layers.empty()) throw InvalidInput("model: no layers");
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    if (l.in == 0 || l.out == 0) throw InvalidInput("model: empty layer");
    if (l.weight.size() != l.in * l.out || l.bias.size() != l.out) {
      throw InvalidInput("model: layer " + std::to_string(k) + " has inconsistent sizes");
    }
    if (k > 0 && layers[k - 1].out != l.in) {
      throw InvalidInput("model: layer " + std::to_string(k) + " input " + std::to_string(l.in) +
                         " does not chain from previous output " +
                         std::to_string(layers[k - 1].out));
    }
    for (double v : l.weight) {
      if (!std::isfinite(v)) throw InvalidInput("model: non-finite weight");
    }
    for (double v : l.bias) {
      if (!std::isfinite(v)) throw InvalidInput("model: non-finite bias");
    }
  }
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw InvalidInput("model: temperature must be finite and > 0");
  }
}

ModelParams init_model(std::size_t input_dim, std::span<const std::size_t> hidden,
                       std::size_t output_dim, std::uint64_t seed) {
  auto rng = make_rng(seed, "init");
  ModelParams m;
  std::size_t prev = input_dim;
  auto add_layer = [&](std::size_t out) {
    Layer l;
    l.in = prev;
    l.out = out;
    const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
    std::uniform_real_distribution<double> u(-bound, bound);
    l.weight.resize(l.in * l.out);
    for (auto& w : l.weight) w = u(rng);
    l.bias.assign(out, 0.0);
    m.layers.push_back(std::move(l));
    prev = out;
  };
  for (std::size_t h : hidden) add_layer(h);
  add_layer(output_dim);
  m.validate();
  return m;
}

namespace {

void dense(const Layer& l, std::span<const double> x, std::vector<double>& z) {
  z.resize(l.out);
  for (std::size_t r = 0; r < l.out; ++r) {
    const double* w = l.weight.data() + r * l.in;
    double acc = 0.0;
    for (std::size_t c = 0; c < l.in; ++c) acc += w[c] * x[c];
    z[r] = acc + l.bias[r];
  }
}

}  // namespace

std::vector<double> forward(const ModelParams& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw InvalidInput("forward: input has " + std::to_string(x.size()) + " entries, model expects " +
                       std::to_string(model.input_dim()));
  }
  std::vector<double> a(x.begin(), x.end());
  std::vector<double> z;
  for (std::size_t k = 0; k < model.layers.size(); ++k) {
    dense(model.layers[k], a, z);
    if (k + 1 < model.layers.size()) {
      for (auto& v : z) v = v > 0.0 ? v : 0.0;
    }
    a.swap(z);
  }
  return a;
}

std::vector<double> softmax_probs(std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0)) throw InvalidInput("softmax: temperature must be > 0");
  if (logits.empty()) throw InvalidInput("softmax: empty logits");
  for (double v : logits) {
    if (!std::isfinite(v)) throw InvalidInput("softmax: non-finite logit");
  }
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp((logits[i] - mx) / temperature);
    s += p[i];
  }
  for (auto& v : p) v /= s;
  return p;
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

void OptConfig::validate() const {
  if (epochs < 0) throw ConfigError("opt: epochs must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("opt: learning rate must be > 0");
  if (batch_size == 0) throw ConfigError("opt: batch size must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("opt: momentum must be in [0,1)");
}

Gradients zero_gradients(const ModelParams& model) {
  Gradients g;
  g.layers = model.layers;
  for (auto& l : g.layers) {
    std::fill(l.weight.begin(), l.weight.end(), 0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  return g;
}

double backprop_sample(const ModelParams& model, std::span<const double> x, std::size_t row,
                       const SampleLoss& loss, Gradients& grads) {
  const std::size_t L = model.layers.size();
  // acts[k] is the input to layer k; pre[k] its pre-activation output.
  std::vector<std::vector<double>> acts(L + 1);
  std::vector<std::vector<double>> pre(L);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t k = 0; k < L; ++k) {
    dense(model.layers[k], acts[k], pre[k]);
    acts[k + 1] = pre[k];
    if (k + 1 < L) {
      for (auto& v : acts[k + 1]) v = v > 0.0 ? v : 0.0;
    }
  }
  std::vector<double> delta(model.output_dim(), 0.0);
  const double value = loss(row, pre[L - 1], delta);

  for (std::size_t kk = L; kk-- > 0;) {
    const auto& layer = model.layers[kk];
    auto& g = grads.layers[kk];
    const auto& in = acts[kk];
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      double* gw = g.weight.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) gw[c] += d * in[c];
      g.bias[r] += d;
    }
    if (kk == 0) break;
    std::vector<double> prev(layer.in, 0.0);
    for (std::size_t r = 0; r < layer.out; ++r) {
      const double d = delta[r];
      if (d == 0.0) continue;
      const double* w = layer.weight.data() + r * layer.in;
      for (std::size_t c = 0; c < layer.in; ++c) prev[c] += d * w[c];
    }
    // ReLU'(0) is taken as 0.
    const auto& z = pre[kk - 1];
    for (std::size_t c = 0; c < layer.in; ++c) {
      if (!(z[c] > 0.0)) prev[c] = 0.0;
    }
    delta.swap(prev);
  }
  return value;
}

double loss_and_gradient(const ModelParams& model, const data::Dataset& data,
                         std::span<const std::size_t> rows, const SampleLoss& loss,
                         Gradients& grads) {
  grads = zero_gradients(model);
  double total = 0.0;
  for (std::size_t i : rows) total += backprop_sample(model, data.row(i), i, loss, grads);
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (auto& l : grads.layers) {
    for (auto& v : l.weight) v *= inv;
    for (auto& v : l.bias) v *= inv;
  }
  return total * inv;
}

ModelParams train_with_loss(ModelParams model, const data::Dataset& data, const OptConfig& cfg,
                            const SampleLoss& loss, std::vector<double>* history) {
  cfg.validate();
  model.validate();
  if (data.rows == 0) throw InvalidInput("train: empty dataset");
  if (data.dims != model.input_dim()) throw InvalidInput("train: dataset dims != model input");
  if (cfg.epochs == 0) return model;

  auto rng = make_rng(cfg.seed, "shuffle");
  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), 0);
  Gradients velocity = zero_gradients(model);
  Gradients second = zero_gradients(model);
  Gradients grads;
  const bool full_batch = cfg.batch_size >= data.rows;
  constexpr double kBeta2 = 0.999;
  constexpr double kAdamEps = 1e-8;
  std::uint64_t t = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (!full_batch) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < data.rows; start += cfg.batch_size) {
      const std::size_t end = std::min(data.rows, start + cfg.batch_size);
      std::span<const std::size_t> batch(order.data() + start, end - start);
      epoch_loss += loss_and_gradient(model, data, batch, loss, grads) *
                    static_cast<double>(batch.size());
      ++t;
      const double bc1 = 1.0 - std::pow(cfg.momentum, static_cast<double>(t));
      const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t));
      for (std::size_t k = 0; k < model.layers.size(); ++k) {
        auto& p = model.layers[k];
        auto& g = grads.layers[k];
        auto& v = velocity.layers[k];
        auto& s2 = second.layers[k];
        auto step = [&](std::vector<double>& param, std::vector<double>& grad,
                        std::vector<double>& vel, std::vector<double>& sq) {
          for (std::size_t i = 0; i < param.size(); ++i) {
            switch (cfg.optimizer) {
              case Optimizer::kSgd:
                param[i] -= cfg.lr * grad[i];
                break;
              case Optimizer::kMomentum:
                vel[i] = cfg.momentum * vel[i] + grad[i];
                param[i] -= cfg.lr * vel[i];
                break;
              case Optimizer::kAdam:
                vel[i] = cfg.momentum * vel[i] + (1.0 - cfg.momentum) * grad[i];
                sq[i] = kBeta2 * sq[i] + (1.0 - kBeta2) * grad[i] * grad[i];
                param[i] -= cfg.lr * (vel[i] / bc1) / (std::sqrt(sq[i] / bc2) + kAdamEps);
                break;
            }
          }
        };
        step(p.weight, g.weight, v.weight, s2.weight);
        step(p.bias, g.bias, v.bias, s2.bias);
      }
    }
    if (history) history->push_back(epoch_loss / static_cast<double>(data.rows));
  }
  return model;
}

double cross_entropy_with_grad(std::span<const double> logits, double temperature, int y,
                               std::span<double> grad) {
  const auto p = softmax_probs(logits, temperature);
  const auto yi = static_cast<std::size_t>(y);
  for (std::size_t j = 0; j < p.size(); ++j) {
    grad[j] = (p[j] - (j == yi ? 1.0 : 0.0)) / temperature;
  }
  return -std::log(std::max(p[yi], std::numeric_limits<double>::min()));
}

ModelParams train_ce(ModelParams model, const data::Dataset& data, const OptConfig& cfg,
                     std::vector<double>* history) {
  if (data.rows == 0) throw InvalidInput("train_ce: empty dataset");
  for (int y : data.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= model.output_dim()) {
      throw InvalidInput("train_ce: label outside [0, C)");
    }
  }
  const double T = model.temperature;
  SampleLoss ce = [&](std::size_t row, std::span<const double> logits, std::span<double> g) {
    return cross_entropy_with_grad(logits, T, data.labels[row], g);
  };
  return train_with_loss(std::move(model), data, cfg, ce, history);
}

namespace {

std::vector<std::vector<double>> all_logits(const ModelParams& model, const data::Dataset& d) {
  std::vector<std::vector<double>> out;
  out.reserve(d.rows);
  for (std::size_t i = 0; i < d.rows; ++i) out.push_back(forward(model, d.row(i)));
  return out;
}

double nll_of_logits(const std::vector<std::vector<double>>& logits, const std::vector<int>& y,
                     double T) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const auto& z = logits[i];
    const double mx = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp((v - mx) / T);
    total += std::log(s) - (z[static_cast<std::size_t>(y[i])] - mx) / T;
  }
  return total / static_cast<double>(logits.size());
}

}  // namespace

double mean_nll(const ModelParams& model, const data::Dataset& data, double temperature) {
  if (data.rows == 0) throw InvalidInput("mean_nll: empty dataset");
  return nll_of_logits(all_logits(model, data), data.labels, temperature);
}

double fit_temperature(const ModelParams& model, const data::Dataset& val) {
  if (val.rows == 0) throw InvalidInput("fit_temperature: empty validation set");
  const auto logits = all_logits(model, val);
  auto f = [&](double log_t) { return nll_of_logits(logits, val.labels, std::exp(log_t)); };

  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = -3.0;
  double b = 3.0;
  double c = b - phi * (b - a);
  double d = a + phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > 1e-4) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = f(d);
    }
  }
  const double best = 0.5 * (a + b);
  return f(best) <= f(0.0) ? std::exp(best) : 1.0;
}

Prediction predict(const ModelParams& model, std::span<const double> x) {
  const auto p = softmax_probs(forward(model, x), model.temperature);
  const std::size_t k = argmax(p);
  return {k, p[k]};
}

double accuracy(const ModelParams& model, const data::Dataset& data) {
  if (data.rows == 0) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    if (predict(model, data.row(i)).label == static_cast<std::size_t>(data.labels[i])) ++hit;
  }
  return static_cast<double>(hit) / static_cast<double>(data.rows);
}

double accuracy(const ModelParams& model, const data::Dataset& data,
                const std::vector<bool>& mask, bool inside) {
  std::size_t n = 0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < data.rows; ++i) {
    if (mask[i] != inside) continue;
    ++n;
    if (predict(model, data.row(i)).label == static_cast<std::size_t>(data.labels[i])) ++hit;
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN()
                : static_cast<double>(hit) / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Gaussian head
// ---------------------------------------------------------------------------

double gaussian_nll(double mean, double variance, double y) {
  if (!(variance > 0.0)) throw InvalidInput("gaussian_nll: variance must be > 0");
  const double r = y - mean;
  return 0.5 * (r * r / variance + std::log(variance));
}

GaussianHeadModel::Output GaussianHeadModel::predict(std::span<const double> x) const {
  const auto out = forward(net, x);
  return {out[0], std::exp(out[1])};
}

GaussianHeadModel init_gaussian_head(std::size_t input_dim, std::span<const std::size_t> hidden,
                                     std::uint64_t seed) {
  return {init_model(input_dim, hidden, 2, seed)};
}

GaussianHeadModel train_gaussian_nll(GaussianHeadModel model, const data::Dataset& data,
                                     const OptConfig& cfg) {
  if (!data.is_regression()) throw InvalidInput("train_gaussian_nll: dataset has no targets");
  SampleLoss nll = [&](std::size_t row, std::span<const double> out, std::span<double> g) {
    const double mu = out[0];
    const double logvar = out[1];
    const double var = std::exp(logvar);
    const double r = data.targets[row] - mu;
    g[0] = -r / var;
    g[1] = 0.5 * (1.0 - r * r / var);
    return 0.5 * (r * r / var + logvar);
  };
  model.net = train_with_loss(std::move(model.net), data, cfg, nll);
  return model;
}

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

nlohmann::json model_to_json(const ModelParams& model) {
  model.validate();
  nlohmann::json j;
  j["format_version"] = 1;
  j["input_dim"] = model.input_dim();
  auto dims = nlohmann::json::array();
  auto weights = nlohmann::json::array();
  auto biases = nlohmann::json::array();
  for (const auto& l : model.layers) {
    dims.push_back(l.out);
    weights.push_back(l.weight);
    biases.push_back(l.bias);
  }
  j["layer_dims"] = dims;
  j["weights"] = weights;
  j["biases"] = biases;
  j["temperature"] = model.temperature;
  return j;
}

ModelParams model_from_json(const nlohmann::json& j) {
  try {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != 1) {
      throw InvalidInput("model file: unsupported format_version");
    }
    ModelParams m;
    std::size_t prev = j.at("input_dim").get<std::size_t>();
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (weights.size() != dims.size() || biases.size() != dims.size()) {
      throw InvalidInput("model file: layer count mismatch");
    }
    for (std::size_t k = 0; k < dims.size(); ++k) {
      Layer l;
      l.in = prev;
      l.out = dims[k];
      l.weight = weights[k].get<std::vector<double>>();
      l.bias = biases[k].get<std::vector<double>>();
      m.layers.push_back(std::move(l));
      prev = dims[k];
    }
    m.temperature = j.value("temperature", 1.0);
    m.validate();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInput(std::string("model file: ") + e.what());
  }
}

void save_model(const std::string& path, const ModelParams& model) {
  std::ofstream out(path);
  if (!out) throw IngestionError("cannot write model file '" + path + "'");
  out << model_to_json(model).dump(1) << '\n';
}

ModelParams load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open model file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError("model file '" + path + "': " + e.what());
  }
  return model_from_json(j);
}

}  // namespace calguard::nets
