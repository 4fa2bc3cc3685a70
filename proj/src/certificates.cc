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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "modro/dro.h"
#include "modro/error.h"
#include "modro/rng.h"

namespace modro {
namespace {

constexpr const char* kDefaultCCaveat =
    "absolute constant C is user-set (default 1) and not derived";
constexpr const char* kHeuristicMCaveat =
    "M_loss is an observed maximum times a safety factor, not a proven bound";

void RequireNonNegative(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0) {
    throw Error(ErrorKind::kValidation,
                std::string(name) + " must be finite and nonnegative, got " + std::to_string(v));
  }
}

BoundReport Finish(std::string theorem, nlohmann::json inputs, std::vector<BoundTerm> terms,
                   std::vector<std::string> caveats) {
  BoundReport r;
  r.theorem = std::move(theorem);
  r.inputs = std::move(inputs);
  r.breakdown = std::move(terms);
  r.caveats = std::move(caveats);
  double total = 0.0;
  for (const BoundTerm& term : r.breakdown) total += term.value;
  r.value = total;
  return r;
}

// Sampling terms shared by the chi-square certificates, in summation order.
std::vector<BoundTerm> SamplingTerms(const BoundInputs& in) {
  const double n = static_cast<double>(in.n);
  const double sqrt_b = std::sqrt(in.radius);
  return {{"variance_concentration", sqrt_b * std::sqrt(2.0 * in.t / n) * in.m_loss},
          {"mean_concentration", std::sqrt(in.t / (2.0 * n)) * in.m_loss},
          {"sd_bias", sqrt_b * in.c_const / n}};
}

std::vector<std::string> ChiSquareCaveats(const BoundInputs& in) {
  std::vector<std::string> c{kDefaultCCaveat};
  if (in.m_loss_heuristic) c.emplace_back(kHeuristicMCaveat);
  return c;
}

template <typename T>
void ReadField(const nlohmann::json& doc, const char* key, T* out) {
  if (!doc.contains(key)) return;
  const nlohmann::json& v = doc.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw Error(ErrorKind::kSchema, std::string("$.") + key + ": expected boolean");
  } else if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer() || v.get<long long>() < 0) {
      throw Error(ErrorKind::kSchema, std::string("$.") + key + ": expected nonnegative integer");
    }
  } else {
    if (!v.is_number()) throw Error(ErrorKind::kSchema, std::string("$.") + key + ": expected number");
  }
  *out = v.get<T>();
}

}  // namespace

void BoundInputs::Validate() const {
  RequireNonNegative(radius, "radius");
  if (n < 1) throw Error(ErrorKind::kValidation, "n must be at least 1");
  if (!std::isfinite(t) || t <= 0.0) throw Error(ErrorKind::kValidation, "t must be positive");
  RequireNonNegative(m_loss, "m_loss");
  RequireNonNegative(c_const, "c_const");
  RequireNonNegative(l_loss, "l_loss");
  RequireNonNegative(l_g, "l_g");
  RequireNonNegative(delta_mean, "delta_mean");
  RequireNonNegative(delta_var, "delta_var");
  RequireNonNegative(l_delta, "l_delta");
}

nlohmann::json BoundInputs::ToJson() const {
  return {{"radius", radius},   {"n", n},         {"t", t},
          {"m_loss", m_loss},   {"c_const", c_const}, {"l_loss", l_loss},
          {"l_g", l_g},         {"delta_mean", delta_mean}, {"delta_var", delta_var},
          {"l_delta", l_delta}, {"m_loss_heuristic", m_loss_heuristic}};
}

BoundInputs BoundInputs::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorKind::kSchema, "$: expected object");
  static const char* const kKnown[] = {"radius",  "n",          "t",         "m_loss",
                                       "c_const", "l_loss",     "l_g",       "delta_mean",
                                       "delta_var", "l_delta",  "m_loss_heuristic",
                                       "l_bound", "m_param"};
  for (const auto& [key, value] : doc.items()) {
    if (std::find_if(std::begin(kKnown), std::end(kKnown),
                     [&](const char* k) { return key == k; }) == std::end(kKnown)) {
      throw Error(ErrorKind::kSchema, "$." + key + ": unknown field");
    }
  }
  BoundInputs in;
  ReadField(doc, "radius", &in.radius);
  ReadField(doc, "n", &in.n);
  ReadField(doc, "t", &in.t);
  ReadField(doc, "m_loss", &in.m_loss);
  ReadField(doc, "c_const", &in.c_const);
  ReadField(doc, "l_loss", &in.l_loss);
  ReadField(doc, "l_g", &in.l_g);
  ReadField(doc, "delta_mean", &in.delta_mean);
  ReadField(doc, "delta_var", &in.delta_var);
  ReadField(doc, "l_delta", &in.l_delta);
  ReadField(doc, "m_loss_heuristic", &in.m_loss_heuristic);
  return in;
}

nlohmann::json BoundReport::ToJson() const {
  nlohmann::json terms = nlohmann::json::array();
  for (const BoundTerm& t : breakdown) terms.push_back({{"name", t.name}, {"value", t.value}});
  return {{"theorem", theorem}, {"inputs", inputs}, {"value", value},
          {"breakdown", terms}, {"caveats", caveats}};
}

BoundReport GeneralizationUpper(const BoundInputs& in) {
  in.Validate();
  return Finish("generalization-upper", in.ToJson(), SamplingTerms(in), ChiSquareCaveats(in));
}

BoundReport EncoderRobustUpper(const BoundInputs& in) {
  in.Validate();
  const double encoder =
      in.l_loss * in.l_g * (in.delta_mean + std::sqrt(in.radius) * std::sqrt(in.delta_var));
  double sampling = 0.0;
  for (const BoundTerm& t : SamplingTerms(in)) sampling += t.value;
  return Finish("encoder-robust-upper", in.ToJson(), {{"encoder", encoder}, {"sampling", sampling}},
                ChiSquareCaveats(in));
}

BoundReport MinimaxLower(double l_bound, std::size_t n, double m_param) {
  if (!std::isfinite(l_bound) || l_bound <= 0.0) {
    throw Error(ErrorKind::kValidation, "l_bound must be positive");
  }
  if (n < 1) throw Error(ErrorKind::kValidation, "n must be at least 1");
  if (!std::isfinite(m_param) || m_param <= 2.0) {
    throw Error(ErrorKind::kDomain, "m_param must exceed 2, got " + std::to_string(m_param));
  }
  const double value = l_bound / (4.0 * static_cast<double>(n) * std::log(m_param - 1.0));
  return Finish("minimax-lower", {{"l_bound", l_bound}, {"n", n}, {"m_param", m_param}},
                {{"two_point", value}}, {"natural logarithm in ln(M - 1)"});
}

BoundReport WEncoderUpper(const BoundInputs& in) {
  in.Validate();
  const double encoder =
      in.l_loss * in.l_g * (in.delta_mean + in.l_delta * std::sqrt(in.radius));
  const double hoeffding = in.m_loss * std::sqrt(in.t / (2.0 * static_cast<double>(in.n)));
  std::vector<std::string> caveats;
  if (in.m_loss_heuristic) caveats.emplace_back(kHeuristicMCaveat);
  return Finish("wasserstein-encoder-upper", in.ToJson(),
                {{"encoder", encoder}, {"hoeffding", hoeffding}}, std::move(caveats));
}

void LossDistribution::Validate() const {
  if (values.empty() || values.size() != probabilities.size()) {
    throw Error(ErrorKind::kValidation, "loss distribution needs matching nonempty atoms");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RequireNonNegative(values[i], "loss value");
    RequireNonNegative(probabilities[i], "probability");
    total += probabilities[i];
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorKind::kValidation, "probabilities must sum to 1");
  }
}

double LossDistribution::Mean() const {
  double m = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) m += probabilities[i] * values[i];
  return m;
}

double LossDistribution::Variance() const {
  const double m = Mean();
  double v = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    v += probabilities[i] * (values[i] - m) * (values[i] - m);
  }
  return v;
}

double LossDistribution::MaxValue() const {
  return *std::max_element(values.begin(), values.end());
}

double CoverageTolerance(double t, std::size_t trials) {
  const double level = 2.0 * std::exp(-t);
  const double p = std::min(level, 1.0);
  return level + 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

CoverageReport CoverageExperiment(const LossDistribution& dist, double radius, std::size_t n,
                                  double t, std::size_t trials, std::uint64_t seed,
                                  double c_const) {
  dist.Validate();
  if (trials == 0) throw Error(ErrorKind::kValidation, "trials must be positive");
  BoundInputs in;
  in.radius = radius;
  in.n = n;
  in.t = t;
  in.m_loss = dist.MaxValue();
  in.c_const = c_const;

  CoverageReport report;
  report.bound = GeneralizationUpper(in);
  report.trials = trials;
  const double population =
      dist.Mean() + std::sqrt(radius) * std::sqrt(std::max(dist.Variance(), 0.0));
  report.population_risk = population;

  std::vector<double> cdf(dist.values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = (acc += dist.probabilities[i]);
  cdf.back() = 1.0;

  std::vector<double> sample(n);
  for (std::size_t trial = 0; trial < trials; ++trial) {
    Rng rng(MixSeed(seed, trial));
    for (std::size_t j = 0; j < n; ++j) {
      const double u = rng.Uniform();
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      sample[j] = dist.values[std::min<std::size_t>(it - cdf.begin(), cdf.size() - 1)];
    }
    const double gap =
        std::abs(RobustRisk(ComputeLossStats(std::span<const double>(sample)), radius).total -
                 population);
    report.max_gap = std::max(report.max_gap, gap);
    if (gap > report.bound.value) ++report.violations;
  }
  report.frequency = static_cast<double>(report.violations) / static_cast<double>(trials);
  report.tolerance = CoverageTolerance(t, trials);
  report.passed = report.frequency <= report.tolerance;
  return report;
}

double WassersteinRobustRisk(const Eigen::VectorXd& abs_losses, double radius,
                             const MlpModel& head) {
  if (head.num_layers() != 1) {
    throw Error(ErrorKind::kShape, "Wasserstein dual form needs a linear head");
  }
  return abs_losses.mean() + radius * head.weight(0).norm();
}

EncoderReport EncoderPerturbationExperiment(const LateFusionModel& base,
                                            const MultimodalDataset& sample,
                                            const MultimodalDataset& population,
                                            const EncoderExperimentConfig& cfg) {
  base.Validate();
  if (cfg.modality >= base.encoders.size()) {
    throw Error(ErrorKind::kBounds, "modality index " + std::to_string(cfg.modality) +
                                        " out of range for " +
                                        std::to_string(base.encoders.size()) + " encoders");
  }
  const MlpModel& encoder = base.encoders[cfg.modality];
  if (encoder.num_layers() != 1) {
    throw Error(ErrorKind::kShape, "encoder perturbation experiment needs linear encoders");
  }
  RequireNonNegative(cfg.scale, "scale");
  RequireNonNegative(cfg.radius, "radius");
  if (cfg.trials == 0) throw Error(ErrorKind::kValidation, "trials must be positive");

  const bool wasserstein = cfg.kind == EncoderBoundKind::kWasserstein;
  EncoderReport report;
  report.theorem = wasserstein ? "wasserstein-encoder-upper" : "encoder-robust-upper";

  const Eigen::VectorXd pop_losses =
      (Predict(base, population) - population.targets()).cwiseAbs();
  const double pop_risk =
      wasserstein ? WassersteinRobustRisk(pop_losses, cfg.radius, base.head)
                  : RobustRisk(ComputeLossStats(pop_losses), cfg.radius).total;
  const Eigen::MatrixXd& x = sample.block(cfg.modality);
  const Eigen::VectorXd base_embed = MlpForward(encoder, x, nullptr).col(0);
  const double l_g = HeadLipschitzInput(base.head, cfg.modality);

  for (std::size_t trial = 0; trial < cfg.trials; ++trial) {
    Rng rng(MixSeed(cfg.seed, trial));
    LateFusionModel perturbed = base;
    MlpModel& enc = perturbed.encoders[cfg.modality];
    Eigen::MatrixXd& w = enc.mutable_weight(0);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) += cfg.scale * rng.Normal();
    }
    Eigen::VectorXd& b = enc.mutable_bias(0);
    for (Eigen::Index r = 0; r < b.size(); ++r) b(r) += cfg.scale * rng.Normal();

    const Eigen::VectorXd losses = (Predict(perturbed, sample) - sample.targets()).cwiseAbs();
    const double risk = wasserstein ? WassersteinRobustRisk(losses, cfg.radius, perturbed.head)
                                    : RobustRisk(ComputeLossStats(losses), cfg.radius).total;
    const Eigen::VectorXd abs_delta =
        (MlpForward(enc, x, nullptr).col(0) - base_embed).cwiseAbs();
    const LossStats delta = ComputeLossStats(abs_delta);

    BoundInputs in;
    in.radius = cfg.radius;
    in.n = sample.num_samples();
    in.t = cfg.t;
    in.m_loss = cfg.m_loss_factor * std::max(losses.maxCoeff(), pop_losses.maxCoeff());
    in.m_loss_heuristic = true;
    in.c_const = cfg.c_const;
    in.l_loss = 1.0;
    in.l_g = l_g;
    in.delta_mean = delta.mean;
    in.delta_var = delta.variance;
    in.l_delta = SpectralNorm(enc.weight(0) - encoder.weight(0));
    const BoundReport bound = wasserstein ? WEncoderUpper(in) : EncoderRobustUpper(in);

    EncoderTrial row;
    row.gap = std::abs(risk - pop_risk);
    row.bound = bound.value;
    row.encoder_term = bound.breakdown.front().value;
    row.delta_mean = delta.mean;
    row.delta_var = delta.variance;
    row.violated = row.gap > row.bound;
    if (row.violated) ++report.violations;
    report.trials.push_back(row);
  }
  report.passed = report.violations == 0;
  return report;
}

LecamReport LecamProbe(double l_bound, std::size_t n, double m_param, std::size_t trials,
                       std::uint64_t seed, double radius, std::optional<double> delta_override) {
  LecamReport report;
  report.bound = MinimaxLower(l_bound, n, m_param);
  report.radius = radius;
  RequireNonNegative(radius, "radius");
  if (trials == 0) throw Error(ErrorKind::kValidation, "trials must be positive");
  report.delta = delta_override.value_or(
      1.0 / (2.0 * static_cast<double>(n) * std::log(m_param - 1.0)));
  if (!(report.delta >= 0.0) || report.delta >= 0.5) {
    throw Error(ErrorKind::kDegenerateInput,
                "two-point construction needs delta in [0, 1/2), got " +
                    std::to_string(report.delta));
  }
  const double sqrt_b = std::sqrt(radius);
  double errors[2] = {0.0, 0.0};
  for (int which = 0; which < 2; ++which) {
    const double p = which == 0 ? 0.5 + report.delta : 0.5 - report.delta;
    const double truth = p * l_bound + sqrt_b * l_bound * std::sqrt(p * (1.0 - p));
    double total = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      Rng rng(MixSeed(MixSeed(seed, static_cast<std::uint64_t>(which)), trial));
      std::size_t hits = 0;
      for (std::size_t j = 0; j < n; ++j) hits += rng.Uniform() < p ? 1 : 0;
      const double frac = static_cast<double>(hits) / static_cast<double>(n);
      const double estimate =
          frac * l_bound + sqrt_b * l_bound * std::sqrt(frac * (1.0 - frac));
      total += std::abs(estimate - truth);
    }
    errors[which] = total / static_cast<double>(trials);
  }
  report.error_first = errors[0];
  report.error_second = errors[1];
  report.sup_error = std::max(errors[0], errors[1]);
  const double threshold = delta_override ? 0.0 : report.bound.value;
  report.passed = report.sup_error >= threshold;
  return report;
}

}  // namespace modro
