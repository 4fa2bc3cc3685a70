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

#include "modro/certificates.h"

#include <cmath>

#include <gtest/gtest.h>

#include "modro/rng.h"
#include "modro/synthetic.h"
#include "test_util.h"

namespace modro {
namespace {

double SumTerms(const BoundReport& r) {
  double s = 0;
  for (const auto& t : r.breakdown) s += t.value;
  return s;
}

BoundInputs Basic() {
  BoundInputs in;
  in.radius = 1;
  in.t = 1;
  in.n = 100;
  in.m_loss = 1;
  in.c_const = 1;
  return in;
}

TEST(GeneralizationUpper, WorkedExample) {
  const BoundReport r = GeneralizationUpper(Basic());
  ASSERT_EQ(r.breakdown.size(), 3u);
  EXPECT_NEAR(r.breakdown[0].value, 0.141421, 1e-6);
  EXPECT_NEAR(r.breakdown[1].value, 0.070711, 1e-6);
  EXPECT_NEAR(r.breakdown[2].value, 0.01, 1e-15);
  EXPECT_NEAR(r.value, 0.222132, 1e-6);
  EXPECT_EQ(r.value, SumTerms(r));
  EXPECT_EQ(r.theorem, "generalization-upper");
}

TEST(GeneralizationUpper, ZeroRadiusLeavesHoeffding) {
  BoundInputs in = Basic();
  in.radius = 0;
  EXPECT_DOUBLE_EQ(GeneralizationUpper(in).value, std::sqrt(1.0 / 200.0));
}

TEST(GeneralizationUpper, Monotone) {
  Rng rng(1);
  for (int t = 0; t < 1000; ++t) {
    BoundInputs in;
    in.radius = rng.Uniform(0, 3);
    in.t = rng.Uniform(0.1, 5);
    in.n = 1 + rng.Index(5000);
    in.m_loss = rng.Uniform(0.1, 10);
    in.c_const = rng.Uniform(0, 5);
    const double base = GeneralizationUpper(in).value;
    BoundInputs more = in;
    switch (t % 5) {
      case 0: more.n += 1 + rng.Index(100); EXPECT_LE(GeneralizationUpper(more).value, base); continue;
      case 1: more.radius += rng.Uniform(); break;
      case 2: more.t += rng.Uniform(); break;
      case 3: more.m_loss += rng.Uniform(); break;
      default: more.c_const += rng.Uniform(); break;
    }
    EXPECT_GE(GeneralizationUpper(more).value, base);
  }
}

TEST(BoundInputs, ValidationAndJson) {
  BoundInputs in = Basic();
  in.radius = -1;
  EXPECT_MODRO_ERROR(GeneralizationUpper(in), ErrorKind::kValidation);
  in = Basic();
  in.n = 0;
  EXPECT_MODRO_ERROR(GeneralizationUpper(in), ErrorKind::kValidation);

  const BoundInputs back = BoundInputs::FromJson(Basic().ToJson());
  EXPECT_EQ(GeneralizationUpper(back).value, GeneralizationUpper(Basic()).value);
  try {
    BoundInputs::FromJson(nlohmann::json::parse(R"({"radius": "big"})"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSchema);
    EXPECT_NE(std::string(e.what()).find("radius"), std::string::npos);
  }
  EXPECT_MODRO_ERROR(BoundInputs::FromJson(nlohmann::json::parse(R"({"radiuss": 1})")),
                     ErrorKind::kSchema);
}

TEST(EncoderRobustUpper, ReducesToGeneralization) {
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    BoundInputs in;
    in.radius = rng.Uniform(0, 3);
    in.n = 1 + rng.Index(1000);
    in.t = rng.Uniform(0.1, 4);
    in.m_loss = rng.Uniform(0.1, 5);
    in.l_loss = rng.Uniform(0.1, 3);
    in.l_g = rng.Uniform(0.1, 3);
    EXPECT_EQ(EncoderRobustUpper(in).value, GeneralizationUpper(in).value);
  }
  BoundInputs in = Basic();
  in.l_loss = 2;
  in.l_g = 3;
  in.delta_mean = 0.25;
  const BoundReport r = EncoderRobustUpper(in);
  EXPECT_DOUBLE_EQ(r.breakdown[0].value, 1.5);
  EXPECT_NEAR(r.value, SumTerms(r), 1e-15);
  in.delta_var = 0.04;
  in.radius = 4;
  EXPECT_DOUBLE_EQ(EncoderRobustUpper(in).breakdown[0].value, 6 * (0.25 + 2 * 0.2));
}

TEST(MinimaxLower, ExampleScalingAndDomain) {
  const BoundReport r = MinimaxLower(1, 100, 3);
  EXPECT_NEAR(r.value, 1.0 / (400 * std::log(2.0)), 1e-15);
  EXPECT_NEAR(r.value, 0.0036067, 1e-7);
  EXPECT_DOUBLE_EQ(MinimaxLower(1, 200, 3).value * 2, r.value);
  EXPECT_MODRO_ERROR(MinimaxLower(1, 100, 2), ErrorKind::kDomain);
  EXPECT_MODRO_ERROR(MinimaxLower(1, 100, 1.5), ErrorKind::kDomain);
}

TEST(WEncoderUpper, Cases) {
  BoundInputs in = Basic();
  in.t = 2;
  EXPECT_DOUBLE_EQ(WEncoderUpper(in).value, std::sqrt(2.0 / 200.0));
  in.radius = 0;
  in.delta_mean = 0.5;
  in.l_delta = 7;
  in.l_loss = 2;
  in.l_g = 1.5;
  EXPECT_DOUBLE_EQ(WEncoderUpper(in).value, 1.5 + std::sqrt(2.0 / 200.0));
  in.radius = 4;
  const BoundReport r = WEncoderUpper(in);
  EXPECT_DOUBLE_EQ(r.breakdown[0].value, 3 * (0.5 + 14));
  EXPECT_EQ(r.value, SumTerms(r));
}

LossDistribution Coin() { return {{0.0, 1.0}, {0.5, 0.5}}; }

TEST(Coverage, ToleranceEdges) {
  EXPECT_NEAR(CoverageTolerance(1e-9, 100), 2.0, 1e-6);
  const double p = 2 * std::exp(-2.0);
  EXPECT_NEAR(CoverageTolerance(2, 2000), p + 3 * std::sqrt(p * (1 - p) / 2000), 1e-15);
}

TEST(Coverage, TwoPointWorkedCase) {
  const CoverageReport r = CoverageExperiment(Coin(), 1.0, 100, 2.0, 2000, 3);
  EXPECT_EQ(r.trials, 2000u);
  EXPECT_DOUBLE_EQ(r.population_risk, 1.0);
  EXPECT_LE(r.frequency, r.tolerance);
  EXPECT_TRUE(r.passed);
  RecordProperty("observed_frequency", std::to_string(r.frequency));
}

TEST(Coverage, LargeSampleHasNoViolations) {
  const CoverageReport r = CoverageExperiment(Coin(), 1.0, 100000, 3.0, 100, 4);
  EXPECT_EQ(r.violations, 0u);
  const CoverageReport vacuous = CoverageExperiment(Coin(), 1.0, 10, 1e-6, 50, 5);
  EXPECT_TRUE(vacuous.passed);
}

TEST(Coverage, Validation) {
  EXPECT_MODRO_ERROR(CoverageExperiment({{0, 1}, {0.7, 0.7}}, 1, 10, 1, 10, 1),
                     ErrorKind::kValidation);
  EXPECT_MODRO_ERROR(CoverageExperiment({{-1, 1}, {0.5, 0.5}}, 1, 10, 1, 10, 1),
                     ErrorKind::kValidation);
}

struct EncoderFixture {
  MultimodalDataset fit, sample, population;
  LateFusionModel base;
};

EncoderFixture MakeEncoderFixture() {
  SimConfig cfg;
  cfg.n = 2000;
  cfg.seed = 21;
  MultimodalDataset fit = GenSimulation(cfg);
  cfg.n = 500;
  cfg.seed = 22;
  MultimodalDataset sample = GenSimulation(cfg);
  cfg.n = 5000;
  cfg.seed = 23;
  MultimodalDataset population = GenSimulation(cfg);
  LateFusionModel base = FitLateFusionOls(fit);
  return {std::move(fit), std::move(sample), std::move(population), std::move(base)};
}

TEST(EncoderPerturbation, HoldsAndScalesLinearly) {
  const EncoderFixture f = MakeEncoderFixture();
  for (auto kind : {EncoderBoundKind::kChiSquare, EncoderBoundKind::kWasserstein}) {
    EncoderExperimentConfig cfg;
    cfg.kind = kind;
    cfg.trials = 20;
    cfg.seed = 5;
    const EncoderReport r = EncoderPerturbationExperiment(f.base, f.sample, f.population, cfg);
    EXPECT_EQ(r.violations, 0u);
    EXPECT_TRUE(r.passed);

    EncoderExperimentConfig doubled = cfg;
    doubled.scale = 0.2;
    const EncoderReport r2 = EncoderPerturbationExperiment(f.base, f.sample, f.population, doubled);
    for (std::size_t i = 0; i < r.trials.size(); ++i) {
      const double ratio = r2.trials[i].encoder_term / r.trials[i].encoder_term;
      EXPECT_NEAR(ratio, 2.0, 0.4) << "trial " << i;
    }
  }
}

TEST(EncoderPerturbation, ZeroScaleIsSamplingOnly) {
  const EncoderFixture f = MakeEncoderFixture();
  EncoderExperimentConfig cfg;
  cfg.scale = 0;
  cfg.trials = 3;
  const EncoderReport r = EncoderPerturbationExperiment(f.base, f.sample, f.population, cfg);
  for (const auto& t : r.trials) {
    EXPECT_EQ(t.encoder_term, 0.0);
    EXPECT_EQ(t.delta_mean, 0.0);
    EXPECT_EQ(t.gap, r.trials[0].gap);
  }
  cfg.modality = 9;
  EXPECT_MODRO_ERROR(EncoderPerturbationExperiment(f.base, f.sample, f.population, cfg),
                     ErrorKind::kBounds);
}

TEST(LecamProbe, BoundHoldsAndMatchesFormula) {
  for (std::size_t n : {100u, 1000u}) {
    const LecamReport r = LecamProbe(1, n, 10, 2000, 7);
    EXPECT_EQ(r.bound.value, MinimaxLower(1, n, 10).value);
    EXPECT_DOUBLE_EQ(r.delta, 1.0 / (2.0 * n * std::log(9.0)));
    EXPECT_GE(r.sup_error, r.bound.value);
    EXPECT_TRUE(r.passed);
  }
}

TEST(LecamProbe, ForcedZeroDeltaAndDegenerate) {
  const LecamReport r = LecamProbe(1, 100, 10, 500, 8, 1.0, 0.0);
  EXPECT_EQ(r.delta, 0.0);
  EXPECT_GE(r.sup_error, 0.0);
  EXPECT_TRUE(r.passed);
  EXPECT_MODRO_ERROR(LecamProbe(1, 1, 2.5, 10, 1), ErrorKind::kDegenerateInput);
}

}  // namespace
}  // namespace modro
