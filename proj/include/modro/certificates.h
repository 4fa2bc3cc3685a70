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

#ifndef MODRO_CERTIFICATES_H_
#define MODRO_CERTIFICATES_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "modro/data.h"
#include "modro/models.h"

namespace modro {

// Inputs shared by the certificate formulas. Failure probability is
// 2 exp(-t).
struct BoundInputs {
  double radius = 0.0;
  std::size_t n = 1;
  double t = 1.0;
  double m_loss = 1.0;
  double c_const = 1.0;
  double l_loss = 1.0;
  double l_g = 1.0;
  double delta_mean = 0.0;
  double delta_var = 0.0;
  double l_delta = 0.0;
  // Set when m_loss is an observed-max heuristic rather than a true bound.
  bool m_loss_heuristic = false;

  void Validate() const;
  nlohmann::json ToJson() const;
  // Missing fields keep their defaults; wrong types raise kSchema with the
  // field path.
  static BoundInputs FromJson(const nlohmann::json& doc);
};

struct BoundTerm {
  std::string name;
  double value = 0.0;
};

struct BoundReport {
  std::string theorem;
  nlohmann::json inputs;
  double value = 0.0;
  std::vector<BoundTerm> breakdown;
  std::vector<std::string> caveats;

  nlohmann::json ToJson() const;
};

// sqrt(B) sqrt(2t/N) M + sqrt(t/2N) M + sqrt(B) C / N.
BoundReport GeneralizationUpper(const BoundInputs& in);

// L_loss L_g (E|Delta| + sqrt(B) sqrt(Var|Delta|)) plus the sampling terms
// of GeneralizationUpper.
BoundReport EncoderRobustUpper(const BoundInputs& in);

// L / (4 N ln(M - 1)), natural log; requires M > 2.
BoundReport MinimaxLower(double l_bound, std::size_t n, double m_param);

// L_loss L_g (E|Delta| + L_Delta sqrt(B)) + M sqrt(t / 2n).
BoundReport WEncoderUpper(const BoundInputs& in);

// Finite loss distribution on nonnegative atoms.
struct LossDistribution {
  std::vector<double> values;
  std::vector<double> probabilities;

  void Validate() const;
  double Mean() const;
  double Variance() const;
  double MaxValue() const;
};

struct CoverageReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double frequency = 0.0;
  // 2 exp(-t) plus three binomial standard errors.
  double tolerance = 0.0;
  double population_risk = 0.0;
  double max_gap = 0.0;
  bool passed = false;
  BoundReport bound;
};

// Draws `trials` samples of size n, compares the plug-in robust risk with
// its exact population value, and counts bound violations.
CoverageReport CoverageExperiment(const LossDistribution& dist, double radius, std::size_t n,
                                  double t, std::size_t trials, std::uint64_t seed,
                                  double c_const = 1.0);

double CoverageTolerance(double t, std::size_t trials);

enum class EncoderBoundKind { kChiSquare, kWasserstein };

struct EncoderExperimentConfig {
  EncoderBoundKind kind = EncoderBoundKind::kChiSquare;
  std::size_t modality = 0;
  double scale = 0.1;
  double radius = 1.0;
  double t = 3.0;
  std::size_t trials = 50;
  std::uint64_t seed = 0;
  double c_const = 1.0;
  // Safety factor on the observed maximum loss used as M_loss.
  double m_loss_factor = 1.5;
};

struct EncoderTrial {
  double gap = 0.0;
  double bound = 0.0;
  double encoder_term = 0.0;
  double delta_mean = 0.0;
  double delta_var = 0.0;
  bool violated = false;
};

struct EncoderReport {
  std::vector<EncoderTrial> trials;
  std::size_t violations = 0;
  bool passed = false;
  std::string theorem;
};

// Perturbs encoder `modality` of a linear-encoder late fusion model with
// seeded Gaussian noise of the given scale, measures
// |r(perturbed, sample) - r(base, population proxy)| under absolute loss,
// and checks it against the encoder-robust certificate built from measured
// Delta moments and analytic Lipschitz bounds.
EncoderReport EncoderPerturbationExperiment(const LateFusionModel& base,
                                            const MultimodalDataset& sample,
                                            const MultimodalDataset& population,
                                            const EncoderExperimentConfig& cfg);

// Plug-in robust risk under the Wasserstein dual form for a linear head:
// mean absolute loss + radius * ||head weights||_2.
double WassersteinRobustRisk(const Eigen::VectorXd& abs_losses, double radius,
                             const MlpModel& head);

struct LecamReport {
  double delta = 0.0;
  double radius = 1.0;
  double error_first = 0.0;
  double error_second = 0.0;
  double sup_error = 0.0;
  BoundReport bound;
  bool passed = false;
};

// Two-point construction with delta = 1 / (2 n ln(M - 1)); estimates the
// mean absolute error of the plug-in robust risk under each distribution.
LecamReport LecamProbe(double l_bound, std::size_t n, double m_param, std::size_t trials,
                       std::uint64_t seed, double radius = 1.0,
                       std::optional<double> delta_override = std::nullopt);

}  // namespace modro

#endif  // MODRO_CERTIFICATES_H_
