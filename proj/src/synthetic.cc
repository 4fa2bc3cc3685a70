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

#include "modro/synthetic.h"

#include <cmath>

#include "modro/error.h"
#include "modro/rng.h"

namespace modro {

void SimConfig::Validate() const {
  if (n < 1) throw Error(ErrorKind::kValidation, "simulation needs n >= 1");
  if (!(w >= 0.0 && w <= 1.0)) throw Error(ErrorKind::kValidation, "mixing weight w must lie in [0, 1]");
  if (!(sigma_eps >= 0.0)) throw Error(ErrorKind::kValidation, "sigma_eps must be >= 0");
  if (!std::isfinite(shift)) throw Error(ErrorKind::kValidation, "shift must be finite");
}

double SimulationResponse(double feature_sum, double modality1_mean) {
  double y = feature_sum;
  if (modality1_mean > 1.0) y += SimConfig::kBump;
  if (modality1_mean < -1.0) y -= SimConfig::kBump;
  return y;
}

MultimodalDataset GenSimulation(const SimConfig& cfg) {
  cfg.Validate();
  constexpr auto kDim = static_cast<Eigen::Index>(SimConfig::kDim);
  const auto n = static_cast<Eigen::Index>(cfg.n);
  Rng rng(cfg.seed);
  std::vector<RowMatrix> blocks(SimConfig::kModalities, RowMatrix(n, kDim));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double sum = 0.0;
    double m1_sum = 0.0;
    for (Eigen::Index j = 0; j < kDim; ++j) {
      const double v = cfg.shift + rng.Normal();
      blocks[0](i, j) = v;
      m1_sum += v;
    }
    sum += m1_sum;
    for (std::size_t k = 1; k < SimConfig::kModalities; ++k) {
      for (Eigen::Index j = 0; j < kDim; ++j) {
        const double eps = cfg.sigma_eps * rng.Normal();
        const double v = cfg.w * blocks[0](i, j) + (1.0 - cfg.w) * eps;
        blocks[k](i, j) = v;
        sum += v;
      }
    }
    y(i) = SimulationResponse(sum, m1_sum / static_cast<double>(kDim));
  }
  return MultimodalDataset(std::move(blocks), std::move(y));
}

Eigen::MatrixXd CholeskyFactor(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
    throw Error(ErrorKind::kFactorization, "covariance must be a non-empty square matrix");
  }
  if (!sigma.allFinite() || !sigma.isApprox(sigma.transpose(), 1e-12)) {
    throw Error(ErrorKind::kFactorization, "covariance must be finite and symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kFactorization, "covariance is not positive definite");
  }
  Eigen::MatrixXd l = llt.matrixL();
  const double scale = sigma.diagonal().cwiseAbs().maxCoeff();
  if (l.diagonal().minCoeff() <= 1e-12 * std::sqrt(scale)) {
    throw Error(ErrorKind::kFactorization, "covariance is numerically singular");
  }
  return l;
}

GaussianPair GenGaussianPair(double c, double sigma1, double sigma2, double z_scale,
                             std::uint64_t seed) {
  if (!(std::abs(c) < 1.0)) {
    throw Error(ErrorKind::kValidation, "correlation must satisfy |c| < 1");
  }
  if (!(sigma1 > 0.0 && sigma2 > 0.0)) {
    throw Error(ErrorKind::kValidation, "standard deviations must be positive");
  }
  if (!(z_scale >= 0.0)) throw Error(ErrorKind::kValidation, "z_scale must be >= 0");
  GaussianPair pair;
  pair.sigma.resize(2, 2);
  pair.sigma << sigma1 * sigma1, c * sigma1 * sigma2, c * sigma1 * sigma2, sigma2 * sigma2;
  pair.mu_p = Eigen::VectorXd::Zero(2);
  Rng rng(seed);
  const double z1 = z_scale * rng.Normal();
  const double z2 = z_scale * rng.Normal();
  pair.mu_q.resize(2);
  pair.mu_q << z1 * sigma1, z2 * sigma2;
  return pair;
}

Eigen::MatrixXd SampleGaussian(const Eigen::VectorXd& mean, const Eigen::MatrixXd& sigma,
                               std::size_t n, std::uint64_t seed) {
  if (mean.size() != sigma.rows()) {
    throw Error(ErrorKind::kShape, "mean and covariance dimensions differ");
  }
  const Eigen::MatrixXd l = CholeskyFactor(sigma);
  const auto dim = mean.size();
  Rng rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
  Eigen::VectorXd xi(dim);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) xi(j) = rng.Normal();
    out.row(i) = (mean + l * xi).transpose();
  }
  return out;
}

void TwoPointPair::Validate() const {
  if (!(loss > 0.0)) throw Error(ErrorKind::kValidation, "two-point loss magnitude must be > 0");
  if (!(delta >= 0.0 && delta < 0.5)) {
    throw Error(ErrorKind::kValidation, "two-point delta must lie in [0, 1/2)");
  }
  if (!(p_star - delta >= 0.0 && p_star + delta <= 1.0)) {
    throw Error(ErrorKind::kValidation, "p* +/- delta must be a probability");
  }
}

double TwoPointPair::ProbabilityOfLoss(int which) const {
  if (which == 1) return p_star + delta;
  if (which == 2) return p_star - delta;
  throw Error(ErrorKind::kValidation, "two-point selector must be 1 or 2");
}

std::vector<double> GenTwoPoint(const TwoPointPair& pair, int which, std::size_t n,
                                std::uint64_t seed) {
  pair.Validate();
  const double p = pair.ProbabilityOfLoss(which);
  Rng rng(seed);
  std::vector<double> out(n);
  for (auto& v : out) v = rng.Bernoulli(p) ? pair.loss : 0.0;
  return out;
}

}  // namespace modro
