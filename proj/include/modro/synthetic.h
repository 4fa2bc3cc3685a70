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

#ifndef MODRO_SYNTHETIC_H_
#define MODRO_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "modro/data.h"

namespace modro {

// Four-modality simulation. Modality 1 is N(shift * 1, I_5); modalities
// 2..4 mix it with independent noise: m_k = w * m_1 + (1 - w) * eps_k. The
// response is the sum of all features plus +/-10 bumps when the modality-1
// mean leaves [-1, 1].
struct SimConfig {
  std::size_t n = 5000;
  double w = 0.7;
  double sigma_eps = 0.05;
  double shift = 0.0;
  std::uint64_t seed = 0;

  static constexpr std::size_t kModalities = 4;
  static constexpr std::size_t kDim = 5;
  static constexpr double kBump = 10.0;

  void Validate() const;
};

MultimodalDataset GenSimulation(const SimConfig& cfg);

// Response for one sample given its four blocks' row sums and modality-1 mean.
double SimulationResponse(double feature_sum, double modality1_mean);

struct GaussianPair {
  Eigen::VectorXd mu_p;
  Eigen::VectorXd mu_q;
  Eigen::MatrixXd sigma;
};

// 2-D pair with covariance [[s1^2, c s1 s2], [c s1 s2, s2^2]], mu_P = 0 and
// mu_Q = z .* (s1, s2) for z ~ N(0, z_scale^2 I_2).
GaussianPair GenGaussianPair(double c, double sigma1, double sigma2, double z_scale,
                             std::uint64_t seed);

// Rows are draws mean + L xi with L the Cholesky factor of sigma.
Eigen::MatrixXd SampleGaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& sigma,
                               std::size_t n, std::uint64_t seed);

// Lower Cholesky factor; throws kFactorization unless sigma is symmetric PD.
Eigen::MatrixXd CholeskyFactor(const Eigen::MatrixXd& sigma);

// Losses on {0, L}: Z_1 puts mass p* + delta on L, Z_2 puts p* - delta.
struct TwoPointPair {
  double loss = 1.0;
  double delta = 0.1;
  double p_star = 0.5;

  void Validate() const;
  double ProbabilityOfLoss(int which) const;
};

std::vector<double> GenTwoPoint(const TwoPointPair& pair, int which, std::size_t n,
                                std::uint64_t seed);

}  // namespace modro

#endif  // MODRO_SYNTHETIC_H_
