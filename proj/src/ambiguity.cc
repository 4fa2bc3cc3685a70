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

#include "modro/ambiguity.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "modro/error.h"
#include "modro/rng.h"

namespace modro {

AmbiguitySpec AmbiguitySpec::Uniform(double rho, const Eigen::MatrixXd& gamma) {
  AmbiguitySpec spec;
  spec.rho = Eigen::VectorXd::Constant(gamma.rows(), rho);
  spec.gamma = gamma;
  return spec;
}

void AmbiguitySpec::Validate() const {
  const auto k = rho.size();
  if (k < 1) throw Error(ErrorKind::kValidation, "ambiguity spec needs at least one modality");
  if (gamma.rows() != k || gamma.cols() != k) {
    throw Error(ErrorKind::kValidation, "gamma must be K x K with K = number of budgets");
  }
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(rho(i) >= 0.0) || !std::isfinite(rho(i))) {
      throw Error(ErrorKind::kValidation, "budget rho_" + std::to_string(i + 1) + " must be >= 0");
    }
    if (gamma(i, i) != 1.0) throw Error(ErrorKind::kValidation, "gamma must have a unit diagonal");
    for (Eigen::Index j = 0; j < k; ++j) {
      if (!(std::abs(gamma(i, j)) <= 1.0)) {
        throw Error(ErrorKind::kValidation, "correlations must satisfy |gamma_ij| <= 1");
      }
      if (gamma(i, j) != gamma(j, i)) throw Error(ErrorKind::kValidation, "gamma must be symmetric");
    }
  }
  if (kind == AmbiguityKind::kWasserstein && !(p_order >= 1.0)) {
    throw Error(ErrorKind::kValidation, "Wasserstein order must be >= 1");
  }
}

RadiusB ComputeRadius(const AmbiguitySpec& spec) {
  spec.Validate();
  if (spec.kind != AmbiguityKind::kChiSquare) {
    throw Error(ErrorKind::kValidation, "the correlation-aware radius applies to chi-square sets");
  }
  RadiusB r;
  const auto k = spec.rho.size();
  r.budget_sum = spec.rho.sum();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i + 1; j < k; ++j) {
      r.cross_term += 2.0 * std::abs(spec.gamma(i, j)) * std::sqrt(spec.rho(i) * spec.rho(j));
    }
  }
  r.value = r.budget_sum + r.cross_term;
  return r;
}

std::vector<double> AverageRanks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

Eigen::MatrixXd EstimateGamma(const Eigen::MatrixXd& embeddings,
                              const std::vector<std::string>& names) {
  const auto n = embeddings.rows();
  const auto k = embeddings.cols();
  if (n < 3) throw Error(ErrorKind::kValidation, "correlation estimate needs at least 3 samples");
  Eigen::MatrixXd centered(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    const Eigen::VectorXd col = embeddings.col(c);
    const auto ranks = AverageRanks(std::span<const double>(col.data(), static_cast<std::size_t>(n)));
    Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(ranks.data(), n);
    r.array() -= r.mean();
    if (r.squaredNorm() == 0.0) {
      const std::string name = static_cast<std::size_t>(c) < names.size()
                                   ? names[static_cast<std::size_t>(c)]
                                   : "modality " + std::to_string(c + 1);
      throw Error(ErrorKind::kUndefinedCorrelation,
                  "embedding column for " + name + " is constant; correlation undefined");
    }
    centered.col(c) = r / r.norm();
  }
  Eigen::MatrixXd gamma = centered.transpose() * centered;
  for (Eigen::Index i = 0; i < k; ++i) {
    gamma(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < k; ++j) {
      const double v = std::clamp(0.5 * (gamma(i, j) + gamma(j, i)), -1.0, 1.0);
      gamma(i, j) = v;
      gamma(j, i) = v;
    }
  }
  return gamma;
}

double Chi2GaussianMeanShift(const GaussianPair& pair) {
  const Eigen::MatrixXd l = CholeskyFactor(pair.sigma);
  if (pair.mu_p.size() != pair.sigma.rows() || pair.mu_q.size() != pair.sigma.rows()) {
    throw Error(ErrorKind::kShape, "mean vectors do not match covariance dimension");
  }
  const Eigen::VectorXd d = pair.mu_q - pair.mu_p;
  const Eigen::VectorXd w = l.triangularView<Eigen::Lower>().solve(d);
  return std::expm1(w.squaredNorm());
}

DiscreteDist::DiscreteDist(Eigen::VectorXd probabilities) : p_(std::move(probabilities)) {
  if (p_.size() < 1) throw Error(ErrorKind::kValidation, "distribution needs a non-empty support");
  if (!p_.allFinite() || p_.minCoeff() < 0.0) {
    throw Error(ErrorKind::kValidation, "probabilities must be finite and nonnegative");
  }
  if (std::abs(p_.sum() - 1.0) > 1e-9) {
    throw Error(ErrorKind::kValidation, "probabilities must sum to 1");
  }
}

DiscreteDist DiscreteDist::FromWeights(const Eigen::VectorXd& weights) {
  const double total = weights.sum();
  if (!(total > 0.0)) throw Error(ErrorKind::kValidation, "weights must have positive total");
  return DiscreteDist(weights / total);
}

DiscreteDist DiscreteDist::PushForward(std::span<const std::size_t> map,
                                       std::size_t target_size) const {
  if (map.size() != size()) throw Error(ErrorKind::kValidation, "map must cover the whole support");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(target_size));
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] >= target_size) throw Error(ErrorKind::kBounds, "map sends a point outside the target support");
    out(static_cast<Eigen::Index>(map[i])) += p_(static_cast<Eigen::Index>(i));
  }
  return DiscreteDist(out);
}

double Chi2Discrete(const DiscreteDist& q, const DiscreteDist& p) {
  if (q.size() != p.size()) throw Error(ErrorKind::kSize, "distributions have different supports");
  double total = 0.0;
  for (std::size_t x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) {
      if (q[x] > 0.0) {
        throw Error(ErrorKind::kInfiniteDivergence,
                    "q puts mass on support point " + std::to_string(x) + " where p has none");
      }
      continue;
    }
    const double diff = q[x] - p[x];
    total += diff * diff / p[x];
  }
  return total;
}

DpiResult DpiCheck(const DiscreteDist& p, const DiscreteDist& q, std::span<const std::size_t> map,
                   std::size_t target_size) {
  DpiResult r;
  r.rhs = Chi2Discrete(q, p);
  r.lhs = Chi2Discrete(q.PushForward(map, target_size), p.PushForward(map, target_size));
  r.holds = r.lhs <= r.rhs + 1e-12;
  return r;
}

double W1Marginal(std::span<const double> samples_p, std::span<const double> samples_q) {
  if (samples_p.size() != samples_q.size() || samples_p.empty()) {
    throw Error(ErrorKind::kSize, "W1 needs two non-empty samples of equal size");
  }
  std::vector<double> a(samples_p.begin(), samples_p.end());
  std::vector<double> b(samples_q.begin(), samples_q.end());
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / static_cast<double>(a.size());
}

Assignment SolveAssignment(const Eigen::MatrixXd& cost) {
  const auto n = static_cast<std::size_t>(cost.rows());
  if (cost.rows() != cost.cols()) throw Error(ErrorKind::kSize, "assignment cost must be square");
  Assignment result;
  if (n == 0) return result;
  // Shortest augmenting path with dual potentials; 1-based, column 0 is a
  // sentinel.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0);
  std::vector<double> v(n + 1, 0.0);
  std::vector<std::size_t> match(n + 1, 0);
  std::vector<std::size_t> way(n + 1, 0);
  std::vector<double> min_slack(n + 1);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) -
                           u[i0] - v[j];
        if (cur < min_slack[j]) {
          min_slack[j] = cur;
          way[j] = j0;
        }
        if (min_slack[j] < delta) {
          delta = min_slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          min_slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  result.column_for_row.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j) result.column_for_row[match[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) {
    result.cost += cost(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(result.column_for_row[i]));
  }
  return result;
}

double WpJoint(const Eigen::MatrixXd& cloud_p, const Eigen::MatrixXd& cloud_q, double p_order,
               std::size_t cap) {
  if (cloud_p.rows() != cloud_q.rows() || cloud_p.cols() != cloud_q.cols() || cloud_p.rows() < 1) {
    throw Error(ErrorKind::kSize, "joint W_p needs two non-empty clouds of equal shape");
  }
  if (!(p_order >= 1.0)) throw Error(ErrorKind::kValidation, "Wasserstein order must be >= 1");
  const auto n = cloud_p.rows();
  if (static_cast<std::size_t>(n) > cap) {
    throw Error(ErrorKind::kCapacity, "exact assignment is capped at " + std::to_string(cap) +
                                          " points; subsample the clouds (got " +
                                          std::to_string(n) + ")");
  }
  // c^p = sum_i |z_i - z'_i|^p, so the p-th root cancels inside the cost.
  Eigen::MatrixXd cost(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cost(i, j) = (cloud_p.row(i) - cloud_q.row(j)).array().abs().pow(p_order).sum();
    }
  }
  const Assignment a = SolveAssignment(cost);
  return std::pow(std::max(0.0, a.cost) / static_cast<double>(n), 1.0 / p_order);
}

double WLowerBound(std::span<const double> marginal_distances, double p_order) {
  if (!(p_order >= 1.0)) throw Error(ErrorKind::kValidation, "Wasserstein order must be >= 1");
  double total = 0.0;
  for (double d : marginal_distances) {
    if (!(d >= 0.0)) throw Error(ErrorKind::kValidation, "marginal distances must be >= 0");
    total += std::pow(d, p_order);
  }
  return std::pow(total, 1.0 / p_order);
}

double WUpperBound(double delta_p, double delta_q, std::span<const double> rho, double p_order) {
  if (!(delta_p >= 0.0 && delta_q >= 0.0)) {
    throw Error(ErrorKind::kValidation, "independence gaps must be >= 0");
  }
  return delta_p + WLowerBound(rho, p_order) + delta_q;
}

Eigen::MatrixXd ShuffleColumns(const Eigen::MatrixXd& cloud, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd product = cloud;
  for (Eigen::Index c = 0; c < cloud.cols(); ++c) {
    const auto perm = rng.Permutation(static_cast<std::size_t>(cloud.rows()));
    for (Eigen::Index r = 0; r < cloud.rows(); ++r) {
      product(r, c) = cloud(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(r)]), c);
    }
  }
  return product;
}

double DeltaIndependence(const Eigen::MatrixXd& cloud, double p_order, std::uint64_t seed,
                         std::size_t cap) {
  return WpJoint(cloud, ShuffleColumns(cloud, seed), p_order, cap);
}

}  // namespace modro
