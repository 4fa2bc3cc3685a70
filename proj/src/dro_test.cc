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

#include "modro/dro.h"

#include <cmath>

#include <gtest/gtest.h>

#include "modro/rng.h"
#include "modro/synthetic.h"
#include "oracles.h"
#include "test_util.h"

namespace modro {
namespace {

Eigen::VectorXd RandomLosses(Rng& rng, std::size_t n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = std::abs(rng.Normal()) * (1 + rng.Uniform());
  return v;
}

TEST(ComputeLossStats, Examples) {
  const LossStats s = ComputeLossStats(std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(s.n, 4u);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.variance, 1.25);
  EXPECT_DOUBLE_EQ(s.sd, std::sqrt(1.25));
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 4.0);
  EXPECT_EQ(ComputeLossStats(std::vector<double>{7}).sd, 0.0);
  EXPECT_MODRO_ERROR(ComputeLossStats(std::vector<double>{}), ErrorKind::kValidation);
}

TEST(ComputeLossStats, MatchesCompensatedSum) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> x(2 + rng.Index(500));
    const double offset = rng.Uniform(-1e3, 1e3);
    for (auto& v : x) v = offset + rng.Normal();
    EXPECT_NEAR(ComputeLossStats(x).sd, oracle::KahanSd(x), 1e-9);
  }
}

TEST(RobustRisk, ZeroRadiusAndTwoPoint) {
  const LossStats s = ComputeLossStats(std::vector<double>{0, 2});
  const RobustRiskValue zero = RobustRisk(s, 0.0);
  EXPECT_EQ(zero.total, 1.0);
  EXPECT_EQ(zero.penalty, 0.0);
  const RobustRiskValue one = RobustRisk(s, 1.0);
  EXPECT_DOUBLE_EQ(one.total, 2.0);
  EXPECT_TRUE(one.interior);
  EXPECT_FALSE(RobustRisk(s, 1.5).interior);
  EXPECT_MODRO_ERROR(RobustRisk(s, -0.1), ErrorKind::kValidation);
}

// On interior instances the closed form equals the chi-square-ball supremum.
TEST(RobustRisk, MatchesChiSquareBallMaximum) {
  Rng rng(2);
  int checked = 0;
  while (checked < 200) {
    const std::size_t n = 3 + rng.Index(8);
    const Eigen::VectorXd losses = RandomLosses(rng, n);
    const LossStats s = ComputeLossStats(losses);
    const double radius = rng.Uniform(0.01, 0.5);
    const RobustRiskValue r = RobustRisk(s, radius);
    if (!r.interior || s.sd == 0) continue;
    const Eigen::VectorXd p = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / n);
    EXPECT_NEAR(r.total, oracle::Chi2BallMaximum(losses, p, radius), 1e-6 * (1 + r.total));
    ++checked;
  }
}

TEST(RobustRisk, DominatesMean) {
  Rng rng(3);
  for (int t = 0; t < 500; ++t) {
    const LossStats s = ComputeLossStats(RandomLosses(rng, 2 + rng.Index(30)));
    const double radius = rng.Uniform(0, 3);
    EXPECT_GE(RobustRisk(s, radius).total, s.mean);
    EXPECT_GT(RobustRisk(s, radius + 0.1).total, s.mean);
  }
  const LossStats flat = ComputeLossStats(std::vector<double>{2, 2, 2});
  EXPECT_EQ(RobustRisk(flat, 5.0).total, 2.0);
}

TEST(DroLossGradient, ExamplesAndFlatBatch) {
  const Eigen::VectorXd g0 = DroLossGradient(Eigen::Vector2d(0, 2), 0.0);
  EXPECT_EQ(g0, Eigen::Vector2d(0.5, 0.5));
  const Eigen::VectorXd g1 = DroLossGradient(Eigen::Vector2d(0, 2), 1.0);
  EXPECT_DOUBLE_EQ(g1(0), 0.0);
  EXPECT_DOUBLE_EQ(g1(1), 1.0);
  // Zero spread uses the epsilon floor, and deviations are zero anyway.
  EXPECT_EQ(DroLossGradient(Eigen::Vector3d(1, 1, 1), 4.0),
            Eigen::VectorXd::Constant(3, 1.0 / 3));
}

TEST(DroLossGradient, MatchesFiniteDifferences) {
  Rng rng(4);
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd l = RandomLosses(rng, 2 + rng.Index(20));
    const double radius = rng.Uniform(0, 2);
    const Eigen::VectorXd g = DroLossGradient(l, radius);
    const double h = 1e-6;
    for (Eigen::Index i = 0; i < l.size(); ++i) {
      Eigen::VectorXd a = l, b = l;
      a(i) += h;
      b(i) -= h;
      const double fd = (RobustRisk(ComputeLossStats(a), radius).total -
                         RobustRisk(ComputeLossStats(b), radius).total) / (2 * h);
      EXPECT_NEAR(g(i), fd, 1e-6);
    }
  }
}

TEST(ComputeLossStats, SdIsLipschitz) {
  Rng rng(5);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 4 + rng.Index(253);
    Eigen::VectorXd x(static_cast<Eigen::Index>(n)), d(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      x(i) = rng.Normal();
      d(i) = rng.Normal() * rng.Uniform();
    }
    const double lhs = std::abs(ComputeLossStats(Eigen::VectorXd(x + d)).sd - ComputeLossStats(x).sd);
    EXPECT_LE(lhs, d.norm() / std::sqrt(static_cast<double>(n)) + 1e-12);
  }
}

MultimodalDataset LinearData(std::uint64_t seed, std::size_t n) {
  Rng rng(seed);
  std::vector<RowMatrix> blocks{RowMatrix(n, 2), RowMatrix(n, 1)};
  for (auto& b : blocks) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = rng.Normal();
  }
  Eigen::VectorXd y = blocks[0] * Eigen::Vector2d(1.0, -2.0) + 0.5 * blocks[1].col(0);
  y.array() += 0.3;
  return MultimodalDataset(std::move(blocks), y);
}

TEST(Train, LinearErmRecoversOls) {
  const MultimodalDataset ds = LinearData(6, 512);
  OptConfig cfg;
  cfg.epochs = 200;
  cfg.batch_size = 32;
  cfg.learning_rate = 0.02;
  const TrainResult r = Train(MakeEarlyFusionLinear(ds, 7), ds, Objective::Erm(), cfg);
  const Eigen::VectorXd sq = SquaredErrors(r.model, ds);
  EXPECT_LT(sq.mean(), 1e-6);
  EXPECT_EQ(r.trace.size(), 200u);
}

TEST(Train, ZeroRadiusDroEqualsErmAndIsDeterministic) {
  const MultimodalDataset ds = LinearData(8, 300);
  OptConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 50;
  cfg.seed = 3;
  const FusionModel init = MakeLateFusionMlp(ds, 8, 9);
  const TrainResult erm = Train(init, ds, Objective::Erm(), cfg);
  const TrainResult dro = Train(init, ds, Objective::Chi2Dro(0.0), cfg);
  EXPECT_EQ(erm.trace, dro.trace);
  const TrainResult again = Train(init, ds, Objective::Chi2Dro(0.7), cfg);
  const TrainResult twice = Train(init, ds, Objective::Chi2Dro(0.7), cfg);
  EXPECT_EQ(again.trace, twice.trace);
  EXPECT_EQ(ModelToJson(again.model), ModelToJson(twice.model));
  for (std::size_t e = 0; e < erm.trace.size(); ++e) EXPECT_TRUE(std::isfinite(erm.trace[e]));
}

TEST(Train, DivergenceCarriesEpoch) {
  const MultimodalDataset ds = LinearData(10, 64);
  std::vector<RowMatrix> blocks = ds.blocks();
  blocks[0] *= 1e150;
  const MultimodalDataset huge(blocks, ds.targets() * 1e150);
  OptConfig cfg;
  cfg.optimizer = OptimizerKind::kSgd;
  cfg.learning_rate = 1.0;
  cfg.epochs = 3;
  cfg.batch_size = 16;
  try {
    Train(MakeEarlyFusionLinear(huge, 1), huge, Objective::Erm(), cfg);
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kDivergence);
    EXPECT_GE(e.epoch(), 0);
    EXPECT_LT(e.epoch(), 3);
  }
}

// Deterministic instance shared with tests/oracles/wdro_oracle.py.
void WdroInstance(Eigen::MatrixXd& z, Eigen::VectorXd& y) {
  const int n = 60, d = 5;
  const Eigen::VectorXd w = (Eigen::VectorXd(5) << 1.0, -0.5, 0.25, 2.0, 0.0).finished();
  z.resize(n, d);
  y.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) z(i, j) = std::sin(0.37 * (i + 1) * std::pow(j + 2, 1.5));
  }
  y = z * w;
  for (int i = 0; i < n; ++i) y(i) += 0.3 * std::cos(2.1 * i) + 0.5;
}

OptConfig WdroConfig() {
  OptConfig cfg;
  cfg.learning_rate = 0.5;
  cfg.epochs = 20000;
  return cfg;
}

TEST(TrainWdroLinear, UnregularizedRecoversNoiselessWeights) {
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  WdroInstance(z, y);
  const Eigen::VectorXd w = (Eigen::VectorXd(5) << 1.0, -0.5, 0.25, 2.0, 0.0).finished();
  const Eigen::VectorXd clean = (z * w).array() + 0.5;
  const WdroResult r = TrainWdroLinear(z, clean, 0.0, 2.0, WdroConfig());
  EXPECT_LT((r.model.weights - w).cwiseAbs().maxCoeff(), 1e-3);
  EXPECT_NEAR(r.model.bias, 0.5, 1e-3);
}

TEST(TrainWdroLinear, LargeRadiusShrinksToMedian) {
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  WdroInstance(z, y);
  const WdroResult r = TrainWdroLinear(z, y, 50.0, 1.0, WdroConfig());
  EXPECT_LT(r.model.weights.norm(), 1e-6);
  EXPECT_NEAR(WdroObjective(z, y, 50.0, 1.0, r.model),
              (y.array() - Median(std::vector<double>(y.data(), y.data() + y.size()))).abs().mean(),
              1e-6);
}

TEST(TrainWdroLinear, PathMatchesConvexSolver) {
  // {B, objective, ||theta||_2} from wdro_oracle.py.
  const double oracle[][3] = {
      {0.0, 0.168373532, 2.321081941}, {0.1, 0.396360493, 2.275477158},
      {0.2, 0.623750576, 2.271713520}, {0.3, 0.848431673, 2.217184836},
      {0.4, 1.068393937, 2.174679114}, {0.5, 1.269581810, 1.900383231},
      {0.6, 1.412247795, 0.598051845}, {0.7, 1.420642989, 0.0},
      {0.8, 1.420643052, 0.0},         {0.9, 1.420643005, 0.0},
      {1.0, 1.420642985, 0.0},         {1.1, 1.420643023, 0.0},
      {1.2, 1.420642994, 0.0},         {1.3, 1.420642989, 0.0},
      {1.4, 1.420642989, 0.0},         {1.5, 1.420642989, 0.0},
      {1.6, 1.420642990, 0.0},         {1.7, 1.420642991, 0.0},
      {1.8, 1.420642993, 0.0},         {1.9, 1.420642993, 0.0},
      {2.0, 1.420642990, 0.0}};
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  WdroInstance(z, y);
  double previous_norm = std::numeric_limits<double>::infinity();
  for (const auto& row : oracle) {
    const WdroResult r = TrainWdroLinear(z, y, row[0], 2.0, WdroConfig());
    EXPECT_NEAR(r.objective, row[1], 1e-4) << "B=" << row[0];
    const double norm = r.model.weights.norm();
    EXPECT_NEAR(norm, row[2], 2e-2) << "B=" << row[0];
    EXPECT_LE(norm, previous_norm + 1e-3) << "B=" << row[0];
    previous_norm = norm;
  }
}

TEST(TrainWdroLinear, Validation) {
  Eigen::MatrixXd z;
  Eigen::VectorXd y;
  WdroInstance(z, y);
  EXPECT_MODRO_ERROR(TrainWdroLinear(z, y, -1.0, 2.0, WdroConfig()), ErrorKind::kValidation);
  EXPECT_MODRO_ERROR(TrainWdroLinear(z, y, 1.0, 3.0, WdroConfig()), ErrorKind::kValidation);
}

TEST(MinorityMask, ExamplesAndFrequency) {
  RowMatrix b(2, 5);
  b.row(0).setConstant(1.2);
  b.row(1).setZero();
  const MultimodalDataset ds({b}, Eigen::Vector2d(0, 0));
  const std::vector<bool> mask = MinorityMask(ds);
  EXPECT_TRUE(mask[0]);
  EXPECT_FALSE(mask[1]);
  EXPECT_MODRO_ERROR(MinorityMask(MultimodalDataset({RowMatrix::Zero(2, 3)}, Eigen::Vector2d(0, 0))),
                     ErrorKind::kSchema);

  SimConfig cfg;
  cfg.n = 200000;
  cfg.seed = 11;
  const std::vector<bool> sim = MinorityMask(GenSimulation(cfg));
  const double freq = static_cast<double>(std::count(sim.begin(), sim.end(), true)) / cfg.n;
  // 2 Phi(-sqrt(5)) for a mean of five standard normals.
  const double expected = std::erfc(std::sqrt(5.0) / std::sqrt(2.0));
  EXPECT_NEAR(freq, expected, 4 * std::sqrt(expected * (1 - expected) / cfg.n));
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(Median({3, 1, 2}), 2.0);
  EXPECT_EQ(Median({4, 1, 3, 2}), 2.5);
}

}  // namespace
}  // namespace modro
