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

#ifndef MODRO_AMBIGUITY_H_
#define MODRO_AMBIGUITY_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "modro/synthetic.h"

namespace modro {

enum class AmbiguityKind { kChiSquare, kWasserstein };

// Per-modality budgets rho_k and cross-modal correlations gamma_ij.
struct AmbiguitySpec {
  Eigen::VectorXd rho;
  Eigen::MatrixXd gamma;
  AmbiguityKind kind = AmbiguityKind::kChiSquare;
  double p_order = 1.0;

  // Same budget for every modality.
  static AmbiguitySpec Uniform(double rho, const Eigen::MatrixXd& gamma);

  void Validate() const;
};

// B = sum_k rho_k + 2 sum_{i<j} |gamma_ij| sqrt(rho_i rho_j).
struct RadiusB {
  double value = 0.0;
  double budget_sum = 0.0;
  double cross_term = 0.0;
};

RadiusB ComputeRadius(const AmbiguitySpec& spec);

// Average ranks (1-based), ties sharing their mean rank.
std::vector<double> AverageRanks(std::span<const double> values);

// Spearman rank correlation between embedding columns. Throws
// kUndefinedCorrelation naming the offending column when one is constant.
Eigen::MatrixXd EstimateGamma(const Eigen::MatrixXd& embeddings,
                              const std::vector<std::string>& names = {});

// exp(d' Sigma^-1 d) - 1 for two Gaussians sharing Sigma, d = mu_Q - mu_P.
double Chi2GaussianMeanShift(const GaussianPair& pair);

class DiscreteDist {
 public:
  explicit DiscreteDist(Eigen::VectorXd probabilities);
  static DiscreteDist FromWeights(const Eigen::VectorXd& weights);

  std::size_t size() const { return static_cast<std::size_t>(p_.size()); }
  const Eigen::VectorXd& probabilities() const { return p_; }
  double operator[](std::size_t i) const { return p_(static_cast<Eigen::Index>(i)); }

  // Push-forward under map: support i -> map[i] in [0, target_size).
  DiscreteDist PushForward(std::span<const std::size_t> map, std::size_t target_size) const;

 private:
  Eigen::VectorXd p_;
};

// sum_x (q_x - p_x)^2 / p_x. Mass of q where p has none raises
// kInfiniteDivergence instead of returning a float.
double Chi2Discrete(const DiscreteDist& q, const DiscreteDist& p);

struct DpiResult {
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

DpiResult DpiCheck(const DiscreteDist& p, const DiscreteDist& q, std::span<const std::size_t> map,
                   std::size_t target_size);

// 1-D W1 between equal-size empirical samples via sorted order statistics.
double W1Marginal(std::span<const double> samples_p, std::span<const double> samples_q);

// Min-cost perfect matching on a square cost matrix.
struct Assignment {
  std::vector<std::size_t> column_for_row;
  double cost = 0.0;
};

Assignment SolveAssignment(const Eigen::MatrixXd& cost);

inline constexpr std::size_t kDefaultAssignmentCap = 128;

// Equal-weight empirical W_p with ground cost (sum_i |z_i - z'_i|^p)^(1/p).
double WpJoint(const Eigen::MatrixXd& cloud_p, const Eigen::MatrixXd& cloud_q, double p_order,
               std::size_t cap = kDefaultAssignmentCap);

// (sum_i D_i^p)^(1/p).
double WLowerBound(std::span<const double> marginal_distances, double p_order);

// Delta_P + (sum_i rho_i^p)^(1/p) + Delta_Q.
double WUpperBound(double delta_p, double delta_q, std::span<const double> rho, double p_order);

// Copy of the cloud with each column independently permuted (seeded); an
// empirical stand-in for the product of its marginals.
Eigen::MatrixXd ShuffleColumns(const Eigen::MatrixXd& cloud, std::uint64_t seed);

// W_p between the cloud and ShuffleColumns(cloud, seed).
double DeltaIndependence(const Eigen::MatrixXd& cloud, double p_order, std::uint64_t seed,
                         std::size_t cap = kDefaultAssignmentCap);

}  // namespace modro

#endif  // MODRO_AMBIGUITY_H_
