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

#ifndef MODRO_DRO_H_
#define MODRO_DRO_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modro/data.h"
#include "modro/models.h"

namespace modro {

// Moments of a loss sample with 1/n variance normalization.
struct LossStats {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double sd = 0.0;
  double max = 0.0;
  double min = 0.0;
};

LossStats ComputeLossStats(std::span<const double> losses);
LossStats ComputeLossStats(const Eigen::VectorXd& losses);

// Worst-case expected loss over the chi-square ball of radius B:
// mean + sqrt(B) * sd. `interior` is false when the maximizing density
// 1 + sqrt(B / var) (l - mean) would go negative at the smallest loss; the
// total is then an upper-bound surrogate rather than the exact supremum.
struct RobustRiskValue {
  double mean_term = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  bool interior = true;
};

RobustRiskValue RobustRisk(const LossStats& stats, double radius);

inline constexpr double kDefaultSdEpsilon = 1e-8;

// d/dl_i of mean + sqrt(B) * sd: 1/n + sqrt(B) (l_i - mean) / (n max(sd, eps)).
Eigen::VectorXd DroLossGradient(const Eigen::VectorXd& losses, double radius,
                                double sd_epsilon = kDefaultSdEpsilon);

enum class OptimizerKind { kSgd, kAdam };

struct OptConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double learning_rate = 0.005;
  int epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  double sd_epsilon = kDefaultSdEpsilon;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void Validate() const;
};

// Adam / SGD over a flat parameter vector.
class Optimizer {
 public:
  Optimizer(const OptConfig& cfg, Eigen::Index num_parameters);
  void Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);

 private:
  OptConfig cfg_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long step_ = 0;
};

enum class ObjectiveKind { kErm, kChi2Dro };

struct Objective {
  ObjectiveKind kind = ObjectiveKind::kErm;
  double radius = 0.0;

  static Objective Erm() { return {ObjectiveKind::kErm, 0.0}; }
  static Objective Chi2Dro(double radius) { return {ObjectiveKind::kChi2Dro, radius}; }
};

struct TrainResult {
  FusionModel model;
  // Per-epoch average of batch objectives (plain mean loss for ERM,
  // mean + sqrt(B) sd for chi-square DRO).
  std::vector<double> trace;
};

// Minibatch training with squared loss; the DRO penalty is evaluated per
// batch. Deterministic for a fixed (data, cfg). Throws DivergenceError when
// parameters become non-finite.
TrainResult Train(const FusionModel& init, const MultimodalDataset& train_set,
                  const Objective& objective, const OptConfig& cfg);

// Per-sample squared errors of a fitted model.
Eigen::VectorXd SquaredErrors(const FusionModel& model, const MultimodalDataset& ds);

// Wasserstein-DRO linear regression through its regularized form:
// min mean|y - theta'z - b| + B_w ||theta||_p, p in {1, 2}. Normalized
// subgradient steps with geometric decay from `learning_rate` over
// `epochs` iterations; the best iterate is returned.
struct WdroResult {
  LinearModel model;
  double objective = 0.0;
};

double WdroObjective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double radius,
                     double p_order, const LinearModel& model);
WdroResult TrainWdroLinear(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double radius,
                           double p_order, const OptConfig& cfg,
                           const LinearModel* warm_start = nullptr);

// Rows of the four-modality simulation where the response bump is active:
// |mean of modality-1 features| > 1.
std::vector<bool> MinorityMask(const MultimodalDataset& ds);

double Median(std::vector<double> values);

}  // namespace modro

#endif  // MODRO_DRO_H_
