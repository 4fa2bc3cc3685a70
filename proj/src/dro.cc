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

#include <algorithm>
#include <cmath>

#include "modro/error.h"
#include "modro/rng.h"

namespace modro {

LossStats ComputeLossStats(std::span<const double> losses) {
  if (losses.empty()) throw Error(ErrorKind::kValidation, "loss statistics of an empty sample");
  LossStats s;
  s.n = losses.size();
  double sum = 0.0;
  s.min = losses[0];
  s.max = losses[0];
  for (double v : losses) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  const double n = static_cast<double>(s.n);
  s.mean = sum / n;
  // Corrected two-pass variance.
  double sq = 0.0;
  double comp = 0.0;
  for (double v : losses) {
    const double d = v - s.mean;
    sq += d * d;
    comp += d;
  }
  s.variance = std::max(0.0, (sq - comp * comp / n) / n);
  s.sd = std::sqrt(s.variance);
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

LossStats ComputeLossStats(const Eigen::VectorXd& losses) {
  return ComputeLossStats(std::span<const double>(losses.data(), static_cast<std::size_t>(losses.size())));
}

RobustRiskValue RobustRisk(const LossStats& stats, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::kValidation, "ambiguity radius must be a finite value >= 0");
  }
  RobustRiskValue r;
  r.mean_term = stats.mean;
  r.penalty = std::sqrt(radius) * stats.sd;
  r.total = r.mean_term + r.penalty;
  if (stats.sd > 0.0) {
    r.interior = 1.0 - std::sqrt(radius) * (stats.mean - stats.min) / stats.sd >= 0.0;
  }
  return r;
}

Eigen::VectorXd DroLossGradient(const Eigen::VectorXd& losses, double radius, double sd_epsilon) {
  const auto n = losses.size();
  if (n < 2) throw Error(ErrorKind::kDegenerateBatch, "DRO gradient needs a batch of at least 2");
  if (!(radius >= 0.0)) throw Error(ErrorKind::kValidation, "ambiguity radius must be >= 0");
  const LossStats s = ComputeLossStats(losses);
  const double nd = static_cast<double>(n);
  const double scale = std::sqrt(radius) / (nd * std::max(s.sd, sd_epsilon));
  Eigen::VectorXd grad(n);
  for (Eigen::Index i = 0; i < n; ++i) grad(i) = 1.0 / nd + scale * (losses(i) - s.mean);
  return grad;
}

void OptConfig::Validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kValidation, "learning rate must be > 0");
  if (epochs < 1) throw Error(ErrorKind::kValidation, "epochs must be >= 1");
  if (batch_size < 1) throw Error(ErrorKind::kValidation, "batch size must be >= 1");
  if (!(sd_epsilon > 0.0)) throw Error(ErrorKind::kValidation, "sd_epsilon must be > 0");
}

Optimizer::Optimizer(const OptConfig& cfg, Eigen::Index num_parameters)
    : cfg_(cfg),
      m_(Eigen::VectorXd::Zero(num_parameters)),
      v_(Eigen::VectorXd::Zero(num_parameters)) {}

void Optimizer::Step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  if (cfg_.optimizer == OptimizerKind::kSgd) {
    params -= cfg_.learning_rate * grad;
    return;
  }
  ++step_;
  m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grad;
  v_ = cfg_.beta2 * v_ + (1.0 - cfg_.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  params.array() -= cfg_.learning_rate * (m_.array() / c1) /
                    ((v_.array() / c2).sqrt() + cfg_.adam_epsilon);
}

namespace {

Eigen::MatrixXd GatherRows(const RowMatrix& source, std::span<const std::size_t> rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

// Flat parameter view over either fusion layout: encoders then head for late
// fusion.
std::vector<MlpModel*> Parts(FusionModel& model) {
  std::vector<MlpModel*> parts;
  if (auto* late = std::get_if<LateFusionModel>(&model)) {
    for (auto& e : late->encoders) parts.push_back(&e);
    parts.push_back(&late->head);
  } else {
    parts.push_back(&std::get<EarlyFusionModel>(model).model);
  }
  return parts;
}

Eigen::VectorXd FlattenParts(const std::vector<MlpModel*>& parts) {
  Eigen::Index total = 0;
  for (const auto* p : parts) total += static_cast<Eigen::Index>(p->num_parameters());
  Eigen::VectorXd flat(total);
  Eigen::Index pos = 0;
  for (const auto* p : parts) {
    const auto len = static_cast<Eigen::Index>(p->num_parameters());
    flat.segment(pos, len) = p->Flatten();
    pos += len;
  }
  return flat;
}

void AssignParts(const std::vector<MlpModel*>& parts, const Eigen::VectorXd& flat) {
  Eigen::Index pos = 0;
  for (auto* p : parts) {
    const auto len = static_cast<Eigen::Index>(p->num_parameters());
    p->Assign(flat.segment(pos, len));
    pos += len;
  }
}

struct BatchPass {
  Eigen::VectorXd predictions;
  std::vector<Eigen::MatrixXd> inputs;  // one per part
  std::vector<MlpCache> caches;
};

BatchPass ForwardBatch(const FusionModel& model, const MultimodalDataset& ds,
                       std::span<const std::size_t> rows) {
  BatchPass pass;
  if (const auto* late = std::get_if<LateFusionModel>(&model)) {
    const std::size_t k_count = late->num_modalities();
    pass.inputs.resize(k_count + 1);
    pass.caches.resize(k_count + 1);
    Eigen::MatrixXd z(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k_count));
    for (std::size_t k = 0; k < k_count; ++k) {
      pass.inputs[k] = GatherRows(ds.block(k), rows);
      z.col(static_cast<Eigen::Index>(k)) =
          MlpForward(late->encoders[k], pass.inputs[k], &pass.caches[k]).col(0);
    }
    pass.inputs[k_count] = std::move(z);
    pass.predictions = MlpForward(late->head, pass.inputs[k_count], &pass.caches[k_count]).col(0);
  } else {
    const auto& early = std::get<EarlyFusionModel>(model);
    RowMatrix full(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ds.total_dim()));
    Eigen::Index col = 0;
    for (const auto& b : ds.blocks()) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        full.block(static_cast<Eigen::Index>(i), col, 1, b.cols()) =
            b.row(static_cast<Eigen::Index>(rows[i]));
      }
      col += b.cols();
    }
    pass.inputs.emplace_back(full);
    pass.caches.resize(1);
    pass.predictions = MlpForward(early.model, pass.inputs[0], &pass.caches[0]).col(0);
  }
  return pass;
}

Eigen::VectorXd BackwardBatch(const FusionModel& model, const BatchPass& pass,
                              const Eigen::VectorXd& upstream) {
  std::vector<Eigen::VectorXd> grads;
  if (const auto* late = std::get_if<LateFusionModel>(&model)) {
    const std::size_t k_count = late->num_modalities();
    const MlpGradients head =
        MlpBackward(late->head, pass.inputs[k_count], upstream, &pass.caches[k_count]);
    for (std::size_t k = 0; k < k_count; ++k) {
      grads.push_back(MlpBackward(late->encoders[k], pass.inputs[k],
                                  head.inputs.col(static_cast<Eigen::Index>(k)), &pass.caches[k])
                          .Flatten());
    }
    grads.push_back(head.Flatten());
  } else {
    const auto& early = std::get<EarlyFusionModel>(model);
    grads.push_back(MlpBackward(early.model, pass.inputs[0], upstream, &pass.caches[0]).Flatten());
  }
  Eigen::Index total = 0;
  for (const auto& g : grads) total += g.size();
  Eigen::VectorXd flat(total);
  Eigen::Index pos = 0;
  for (const auto& g : grads) {
    flat.segment(pos, g.size()) = g;
    pos += g.size();
  }
  return flat;
}

std::vector<std::span<const std::size_t>> MakeBatches(std::span<const std::size_t> order,
                                                      std::size_t batch_size) {
  std::vector<std::span<const std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t len = std::min(batch_size, order.size() - start);
    batches.push_back(order.subspan(start, len));
  }
  // A trailing singleton batch has no spread; fold it into its predecessor.
  if (batches.size() > 1 && batches.back().size() < 2) {
    const auto last = batches.back();
    batches.pop_back();
    auto& prev = batches.back();
    prev = std::span<const std::size_t>(prev.data(), prev.size() + last.size());
  }
  return batches;
}

}  // namespace

TrainResult Train(const FusionModel& init, const MultimodalDataset& train_set,
                  const Objective& objective, const OptConfig& cfg) {
  cfg.Validate();
  if (objective.kind == ObjectiveKind::kChi2Dro && !(objective.radius >= 0.0)) {
    throw Error(ErrorKind::kValidation, "DRO radius must be >= 0");
  }
  if (const auto* late = std::get_if<LateFusionModel>(&init)) {
    late->Validate();
    if (late->num_modalities() != train_set.num_modalities()) {
      throw Error(ErrorKind::kArity, "model and dataset modality counts differ");
    }
  } else if (std::get<EarlyFusionModel>(init).model.input_dim() != train_set.total_dim()) {
    throw Error(ErrorKind::kShape, "early fusion input width differs from dataset width");
  }
  const bool dro = objective.kind == ObjectiveKind::kChi2Dro;
  if (dro && (cfg.batch_size < 2 || train_set.num_samples() < 2)) {
    throw Error(ErrorKind::kDegenerateBatch, "DRO training needs batches of at least 2 samples");
  }

  TrainResult result{init, {}};
  const auto parts = Parts(result.model);
  Eigen::VectorXd params = FlattenParts(parts);
  Optimizer optimizer(cfg, params.size());
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(train_set.num_samples());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const Eigen::VectorXd& y = train_set.targets();
  const double sqrt_radius = std::sqrt(objective.radius);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(std::span<std::size_t>(order));
    double objective_sum = 0.0;
    const auto batches = MakeBatches(order, cfg.batch_size);
    for (const auto& rows : batches) {
      const BatchPass pass = ForwardBatch(result.model, train_set, rows);
      const auto b = static_cast<Eigen::Index>(rows.size());
      Eigen::VectorXd resid(b);
      for (Eigen::Index i = 0; i < b; ++i) {
        resid(i) = pass.predictions(i) - y(static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]));
      }
      const Eigen::VectorXd losses = resid.cwiseAbs2();
      const LossStats stats = ComputeLossStats(losses);
      Eigen::VectorXd weights;
      if (dro && b >= 2) {
        weights = DroLossGradient(losses, objective.radius, cfg.sd_epsilon);
        objective_sum += stats.mean + sqrt_radius * stats.sd;
      } else {
        weights = Eigen::VectorXd::Constant(b, 1.0 / static_cast<double>(b));
        objective_sum += stats.mean;
      }
      const Eigen::VectorXd upstream = 2.0 * weights.cwiseProduct(resid);
      const Eigen::VectorXd grad = BackwardBatch(result.model, pass, upstream);
      optimizer.Step(params, grad);
      if (!params.allFinite()) {
        throw DivergenceError(epoch, "training diverged (non-finite parameters) in epoch " +
                                         std::to_string(epoch));
      }
      AssignParts(parts, params);
    }
    const double value = objective_sum / static_cast<double>(batches.size());
    if (!std::isfinite(value)) {
      throw DivergenceError(epoch, "training objective became non-finite in epoch " +
                                       std::to_string(epoch));
    }
    result.trace.push_back(value);
  }
  return result;
}

Eigen::VectorXd SquaredErrors(const FusionModel& model, const MultimodalDataset& ds) {
  return (Predict(model, ds) - ds.targets()).cwiseAbs2();
}

double Median(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::kValidation, "median of an empty sample");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

namespace {

double PNorm(const Eigen::VectorXd& v, double p) {
  return p == 1.0 ? v.lpNorm<1>() : v.norm();
}

void CheckWdroInputs(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double radius,
                     double p_order) {
  if (z.rows() != y.size() || z.rows() < 1) {
    throw Error(ErrorKind::kShape, "embedding rows and target length differ");
  }
  if (!(radius >= 0.0)) throw Error(ErrorKind::kValidation, "Wasserstein radius must be >= 0");
  if (p_order != 1.0 && p_order != 2.0) {
    throw Error(ErrorKind::kValidation, "Wasserstein-DRO regression supports p = 1 or p = 2");
  }
}

}  // namespace

double WdroObjective(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double radius,
                     double p_order, const LinearModel& model) {
  CheckWdroInputs(z, y, radius, p_order);
  return (y - model.Predict(z)).cwiseAbs().mean() + radius * PNorm(model.weights, p_order);
}

WdroResult TrainWdroLinear(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double radius,
                           double p_order, const OptConfig& cfg, const LinearModel* warm_start) {
  CheckWdroInputs(z, y, radius, p_order);
  cfg.Validate();
  const auto d = z.cols();
  const double n = static_cast<double>(z.rows());
  LinearModel current;
  if (warm_start != nullptr) {
    if (warm_start->weights.size() != d) throw Error(ErrorKind::kShape, "warm start width mismatch");
    current = *warm_start;
  } else {
    current.weights = Eigen::VectorXd::Zero(d);
    current.bias = Median(std::vector<double>(y.data(), y.data() + y.size()));
  }
  WdroResult best{current, WdroObjective(z, y, radius, p_order, current)};

  constexpr double kFinalStepRatio = 1e-9;
  const int iterations = cfg.epochs;
  const double decay = std::pow(kFinalStepRatio, 1.0 / std::max(1, iterations - 1));
  double step = cfg.learning_rate;
  Eigen::VectorXd grad(d + 1);
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd resid = y - current.Predict(z);
    const Eigen::VectorXd sign = resid.unaryExpr([](double r) {
      return r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
    });
    grad.head(d) = -(z.transpose() * sign) / n;
    grad(d) = -sign.mean();
    if (radius > 0.0) {
      if (p_order == 1.0) {
        grad.head(d) += radius * current.weights.unaryExpr([](double w) {
          return w > 0.0 ? 1.0 : (w < 0.0 ? -1.0 : 0.0);
        });
      } else if (const double norm = current.weights.norm(); norm > 0.0) {
        grad.head(d) += radius * current.weights / norm;
      }
    }
    const double gnorm = grad.norm();
    if (gnorm == 0.0) break;
    current.weights -= step * grad.head(d) / gnorm;
    current.bias -= step * grad(d) / gnorm;
    if (!current.weights.allFinite() || !std::isfinite(current.bias)) {
      throw DivergenceError(it, "Wasserstein-DRO regression diverged at iteration " + std::to_string(it));
    }
    const double value = WdroObjective(z, y, radius, p_order, current);
    if (value < best.objective) best = {current, value};
    step *= decay;
  }
  return best;
}

std::vector<bool> MinorityMask(const MultimodalDataset& ds) {
  if (ds.block(0).cols() != static_cast<Eigen::Index>(5)) {
    throw Error(ErrorKind::kSchema, "minority mask expects a 5-column first modality");
  }
  std::vector<bool> mask(ds.num_samples());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = std::abs(ds.block(0).row(static_cast<Eigen::Index>(i)).mean()) > 1.0;
  }
  return mask;
}

}  // namespace modro
