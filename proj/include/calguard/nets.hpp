#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "calguard/data.hpp"
#include "json.hpp"

namespace calguard::nets {

// Dense layer; weight is out x in, row-major.
struct Layer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;
  std::vector<double> bias;

  double w(std::size_t r, std::size_t c) const { return weight[r * in + c]; }
  double& w(std::size_t r, std::size_t c) { return weight[r * in + c]; }
};

// Feed-forward network: ReLU on every hidden layer, linear output (logits),
// and a softmax temperature applied on top of the logits.
struct ModelParams {
  std::vector<Layer> layers;
  double temperature = 1.0;

  std::size_t input_dim() const { return layers.front().in; }
  std::size_t output_dim() const { return layers.back().out; }
  std::size_t hidden_layers() const { return layers.size() - 1; }

  // Dimension chaining, finite entries, temperature > 0.
  void validate() const;
};

// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
ModelParams init_model(std::size_t input_dim, std::span<const std::size_t> hidden,
                       std::size_t output_dim, std::uint64_t seed);

std::vector<double> forward(const ModelParams& model, std::span<const double> x);

// Numerically stable softmax of logits / temperature.
std::vector<double> softmax_probs(std::span<const double> logits, double temperature = 1.0);

// Lowest index wins ties.
std::size_t argmax(std::span<const double> v);

// Adam reuses `momentum` as beta1 (beta2 = 0.999).
enum class Optimizer { kSgd, kMomentum, kAdam };

struct OptConfig {
  int epochs = 100;
  double lr = 0.05;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kMomentum;
  double momentum = 0.9;

  void validate() const;
};

// Per-sample loss: given the row index and the network's raw logits, return
// the loss and write dLoss/dlogits into `grad`.
using SampleLoss =
    std::function<double(std::size_t row, std::span<const double> logits, std::span<double> grad)>;

// Gradients share the model's layer shapes.
struct Gradients {
  std::vector<Layer> layers;
};

Gradients zero_gradients(const ModelParams& model);

// Accumulates dLoss/dparams for one sample into `grads`; returns the loss.
double backprop_sample(const ModelParams& model, std::span<const double> x, std::size_t row,
                       const SampleLoss& loss, Gradients& grads);

// Mean loss and mean gradient over the given rows.
double loss_and_gradient(const ModelParams& model, const data::Dataset& data,
                         std::span<const std::size_t> rows, const SampleLoss& loss,
                         Gradients& grads);

// Minibatch training loop shared by every objective. Returns the per-epoch
// mean training loss in `history` when non-null.
ModelParams train_with_loss(ModelParams model, const data::Dataset& data, const OptConfig& cfg,
                            const SampleLoss& loss, std::vector<double>* history = nullptr);

// Cross-entropy of softmax(logits / T) against label y; writes d/dlogits.
double cross_entropy_with_grad(std::span<const double> logits, double temperature, int y,
                               std::span<double> grad);

ModelParams train_ce(ModelParams model, const data::Dataset& data, const OptConfig& cfg,
                     std::vector<double>* history = nullptr);

double mean_nll(const ModelParams& model, const data::Dataset& data, double temperature);

// Golden-section search over log T in [-3, 3]; returns T* with
// NLL(T*) <= NLL(1).
double fit_temperature(const ModelParams& model, const data::Dataset& val);

struct Prediction {
  std::size_t label = 0;
  double confidence = 0.0;
};

Prediction predict(const ModelParams& model, std::span<const double> x);
double accuracy(const ModelParams& model, const data::Dataset& data);
double accuracy(const ModelParams& model, const data::Dataset& data,
                const std::vector<bool>& mask, bool inside);

// ---------------------------------------------------------------------------
// Gaussian-head regression
// ---------------------------------------------------------------------------

double gaussian_nll(double mean, double variance, double y);

// Shared trunk whose two outputs are the mean and the log-variance heads.
struct GaussianHeadModel {
  ModelParams net;

  struct Output {
    double mean;
    double variance;
  };
  Output predict(std::span<const double> x) const;
};

GaussianHeadModel init_gaussian_head(std::size_t input_dim, std::span<const std::size_t> hidden,
                                     std::uint64_t seed);

GaussianHeadModel train_gaussian_nll(GaussianHeadModel model, const data::Dataset& data,
                                     const OptConfig& cfg);

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

nlohmann::json model_to_json(const ModelParams& model);
ModelParams model_from_json(const nlohmann::json& j);
void save_model(const std::string& path, const ModelParams& model);
ModelParams load_model(const std::string& path);

}  // namespace calguard::nets
