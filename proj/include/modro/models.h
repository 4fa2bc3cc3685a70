// Copyright 2026 The modro Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MODRO_MODELS_H_
#define MODRO_MODELS_H_

#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "modro/data.h"

namespace modro {

struct LinearModel {
  Eigen::VectorXd weights;
  double bias = 0.0;

  Eigen::VectorXd Predict(const Eigen::MatrixXd& inputs) const;
};

enum class Activation { kRelu, kIdentity };

// Fully connected network; hidden layers use `activation`, the output layer
// is affine. Weight matrix l maps layer l to layer l + 1 and is stored as
// (out x in).
class MlpModel {
 public:
  MlpModel() = default;
  // Zero parameters.
  explicit MlpModel(std::vector<std::size_t> layer_sizes,
                    Activation activation = Activation::kRelu);

  // Weights and biases drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static MlpModel Random(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                         Activation activation = Activation::kRelu);
  static MlpModel FromLinear(const LinearModel& linear);

  const std::vector<std::size_t>& layer_sizes() const { return layer_sizes_; }
  std::size_t num_layers() const { return weights_.size(); }
  std::size_t input_dim() const { return layer_sizes_.front(); }
  std::size_t output_dim() const { return layer_sizes_.back(); }
  Activation activation() const { return activation_; }

  const Eigen::MatrixXd& weight(std::size_t l) const { return weights_.at(l); }
  const Eigen::VectorXd& bias(std::size_t l) const { return biases_.at(l); }
  Eigen::MatrixXd& mutable_weight(std::size_t l) { return weights_.at(l); }
  Eigen::VectorXd& mutable_bias(std::size_t l) { return biases_.at(l); }

  std::size_t num_parameters() const;
  // Layer by layer: weights (row-major) then bias.
  Eigen::VectorXd Flatten() const;
  void Assign(const Eigen::VectorXd& flat);
  bool AllFinite() const;

 private:
  std::vector<std::size_t> layer_sizes_;
  Activation activation_ = Activation::kRelu;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
};

// Per-layer outputs kept by the forward pass for backprop; entry 0 is the
// input, entry l the post-activation output of layer l.
struct MlpCache {
  std::vector<Eigen::MatrixXd> outputs;
};

struct MlpGradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  // d(sum of upstream-weighted outputs)/d(inputs), one row per sample.
  Eigen::MatrixXd inputs;

  Eigen::VectorXd Flatten() const;
};

// Rows of `inputs` are samples; returns one row of outputs per sample.
Eigen::MatrixXd MlpForward(const MlpModel& model, const Eigen::MatrixXd& inputs,
                           MlpCache* cache = nullptr);

// `upstream` holds dL/d(output) per sample. A cache from the matching forward
// pass skips recomputation.
MlpGradients MlpBackward(const MlpModel& model, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& upstream, const MlpCache* cache = nullptr);

// f o g: one scalar encoder per modality and a head over the K embeddings.
struct LateFusionModel {
  std::vector<MlpModel> encoders;
  MlpModel head;

  std::size_t num_modalities() const { return encoders.size(); }
  void Validate() const;
};

struct EarlyFusionModel {
  MlpModel model;
};

using FusionModel = std::variant<LateFusionModel, EarlyFusionModel>;

// N x K embeddings; column k is encoder k applied to block k. With
// `parallel`, encoders run on separate threads.
Eigen::MatrixXd Encode(const LateFusionModel& model, const MultimodalDataset& ds,
                       bool parallel = false);
Eigen::VectorXd Predict(const LateFusionModel& model, const MultimodalDataset& ds);
Eigen::VectorXd Predict(const EarlyFusionModel& model, const MultimodalDataset& ds);
Eigen::VectorXd Predict(const FusionModel& model, const MultimodalDataset& ds);

LateFusionModel MakeLateFusionMlp(const MultimodalDataset& ds, std::size_t hidden,
                                  std::uint64_t seed);
LateFusionModel MakeLateFusionLinear(const MultimodalDataset& ds, std::uint64_t seed);
EarlyFusionModel MakeEarlyFusionMlp(const MultimodalDataset& ds, std::size_t hidden,
                                    std::uint64_t seed);
EarlyFusionModel MakeEarlyFusionLinear(const MultimodalDataset& ds, std::uint64_t seed);

inline constexpr double kDefaultRidge = 1e-8;

// Minimizes ||X w + b - y||^2 + ridge ||w||^2 (bias unpenalized) through the
// centered normal equations and a Cholesky factorization.
LinearModel OlsFit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double ridge);

// Gradient of the ridge objective with respect to (w, b), for checks.
Eigen::VectorXd OlsObjectiveGradient(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                     double ridge, const LinearModel& fit);

// Stage 1 regresses y on each block; stage 2 regresses y on the K stage-1
// predictions. `parallel` runs stage 1 with one thread per modality.
LateFusionModel FitLateFusionOls(const MultimodalDataset& ds, double ridge = kDefaultRidge,
                                 bool parallel = false);
EarlyFusionModel FitEarlyFusionOls(const MultimodalDataset& ds, double ridge = kDefaultRidge);

double MeanSquaredError(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets);

// Largest singular value.
double SpectralNorm(const Eigen::MatrixXd& m);

// Analytic Lipschitz upper bound (l2 -> absolute value): product of layer
// spectral norms; exact ||w||_2 for a single affine layer.
double LipschitzUpperBound(const MlpModel& model);
double LipschitzUpperBound(const LinearModel& model);

// Lipschitz bound of the head with respect to its input coordinate k alone.
double HeadLipschitzInput(const MlpModel& head, std::size_t k);

using ScalarFunction = std::function<double(const Eigen::VectorXd&)>;

// Empirical lower estimate: max |f(x) - f(x')| / ||x - x'||_2 over `pairs`
// seeded random row pairs. Duplicate pairs are skipped.
double LipschitzEstimate(const ScalarFunction& f, const Eigen::MatrixXd& samples,
                         std::size_t pairs, std::uint64_t seed);
double LipschitzEstimate(const MlpModel& model, const Eigen::MatrixXd& samples,
                         std::size_t pairs, std::uint64_t seed);

// JSON model documents, tagged {"format": "modro-model", "version": 1}.
std::string ModelToJson(const FusionModel& model);
FusionModel ModelFromJson(const std::string& text);
std::string MlpToJson(const MlpModel& model);

}  // namespace modro

#endif  // MODRO_MODELS_H_
