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

#include "modro/models.h"

#include <cmath>
#include <thread>

#include <nlohmann/json.hpp>

#include "modro/error.h"
#include "modro/rng.h"

namespace modro {
namespace {

using nlohmann::json;

void CheckDims(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::kShape, message);
}

}  // namespace

Eigen::VectorXd LinearModel::Predict(const Eigen::MatrixXd& inputs) const {
  CheckDims(inputs.cols() == weights.size(), "linear model input width mismatch");
  return (inputs * weights).array() + bias;
}

MlpModel::MlpModel(std::vector<std::size_t> layer_sizes, Activation activation)
    : layer_sizes_(std::move(layer_sizes)), activation_(activation) {
  if (layer_sizes_.size() < 2) {
    throw Error(ErrorKind::kShape, "an MLP needs at least input and output sizes");
  }
  for (std::size_t s : layer_sizes_) {
    if (s == 0) throw Error(ErrorKind::kShape, "MLP layer sizes must be >= 1");
  }
  for (std::size_t l = 0; l + 1 < layer_sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(layer_sizes_[l]);
    const auto out = static_cast<Eigen::Index>(layer_sizes_[l + 1]);
    weights_.push_back(Eigen::MatrixXd::Zero(out, in));
    biases_.push_back(Eigen::VectorXd::Zero(out));
  }
}

MlpModel MlpModel::Random(std::vector<std::size_t> layer_sizes, std::uint64_t seed,
                          Activation activation) {
  MlpModel model(std::move(layer_sizes), activation);
  Rng rng(seed);
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    auto& w = model.weights_[l];
    const double bound = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.Uniform(-bound, bound);
    }
    for (Eigen::Index r = 0; r < w.rows(); ++r) model.biases_[l](r) = rng.Uniform(-bound, bound);
  }
  return model;
}

MlpModel MlpModel::FromLinear(const LinearModel& linear) {
  MlpModel model({static_cast<std::size_t>(linear.weights.size()), 1}, Activation::kIdentity);
  model.weights_[0].row(0) = linear.weights.transpose();
  model.biases_[0](0) = linear.bias;
  return model;
}

std::size_t MlpModel::num_parameters() const {
  std::size_t count = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    count += static_cast<std::size_t>(weights_[l].size() + biases_[l].size());
  }
  return count;
}

Eigen::VectorXd MlpModel::Flatten() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(num_parameters()));
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    const auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      flat.segment(pos, w.cols()) = w.row(r).transpose();
      pos += w.cols();
    }
    flat.segment(pos, biases_[l].size()) = biases_[l];
    pos += biases_[l].size();
  }
  return flat;
}

void MlpModel::Assign(const Eigen::VectorXd& flat) {
  CheckDims(flat.size() == static_cast<Eigen::Index>(num_parameters()),
            "parameter vector length mismatch");
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    auto& w = weights_[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      w.row(r) = flat.segment(pos, w.cols()).transpose();
      pos += w.cols();
    }
    biases_[l] = flat.segment(pos, biases_[l].size());
    pos += biases_[l].size();
  }
}

bool MlpModel::AllFinite() const {
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (!weights_[l].allFinite() || !biases_[l].allFinite()) return false;
  }
  return true;
}

Eigen::VectorXd MlpGradients::Flatten() const {
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
  Eigen::VectorXd flat(total);
  Eigen::Index pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto& w = weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      flat.segment(pos, w.cols()) = w.row(r).transpose();
      pos += w.cols();
    }
    flat.segment(pos, biases[l].size()) = biases[l];
    pos += biases[l].size();
  }
  return flat;
}

Eigen::MatrixXd MlpForward(const MlpModel& model, const Eigen::MatrixXd& inputs, MlpCache* cache) {
  CheckDims(inputs.cols() == static_cast<Eigen::Index>(model.input_dim()),
            "MLP input has " + std::to_string(inputs.cols()) + " columns, expected " +
                std::to_string(model.input_dim()));
  if (cache != nullptr) {
    cache->outputs.clear();
    cache->outputs.push_back(inputs);
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    Eigen::MatrixXd z = a * model.weight(l).transpose();
    z.rowwise() += model.bias(l).transpose();
    const bool hidden = l + 1 < model.num_layers();
    if (hidden && model.activation() == Activation::kRelu) z = z.cwiseMax(0.0);
    a = std::move(z);
    if (cache != nullptr) cache->outputs.push_back(a);
  }
  return a;
}

MlpGradients MlpBackward(const MlpModel& model, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& upstream, const MlpCache* cache) {
  MlpCache local;
  if (cache == nullptr) {
    MlpForward(model, inputs, &local);
    cache = &local;
  }
  CheckDims(cache->outputs.size() == model.num_layers() + 1, "forward cache has wrong depth");
  CheckDims(upstream.rows() == inputs.rows() &&
                upstream.cols() == static_cast<Eigen::Index>(model.output_dim()),
            "upstream gradient shape mismatch");
  MlpGradients grads;
  grads.weights.resize(model.num_layers());
  grads.biases.resize(model.num_layers());
  Eigen::MatrixXd g = upstream;
  for (std::size_t l = model.num_layers(); l-- > 0;) {
    const Eigen::MatrixXd& a = cache->outputs[l];
    grads.weights[l] = g.transpose() * a;
    grads.biases[l] = g.colwise().sum().transpose();
    Eigen::MatrixXd prev = g * model.weight(l);
    if (l > 0 && model.activation() == Activation::kRelu) {
      prev = prev.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
    g = std::move(prev);
  }
  grads.inputs = std::move(g);
  return grads;
}

void LateFusionModel::Validate() const {
  if (encoders.empty()) throw Error(ErrorKind::kArity, "late fusion model has no encoders");
  for (std::size_t k = 0; k < encoders.size(); ++k) {
    if (encoders[k].output_dim() != 1) {
      throw Error(ErrorKind::kShape, "encoder " + std::to_string(k) + " must output a scalar");
    }
  }
  if (head.input_dim() != encoders.size()) {
    throw Error(ErrorKind::kArity, "head input width " + std::to_string(head.input_dim()) +
                                       " differs from encoder count " +
                                       std::to_string(encoders.size()));
  }
  if (head.output_dim() != 1) throw Error(ErrorKind::kShape, "head must output a scalar");
}

Eigen::MatrixXd Encode(const LateFusionModel& model, const MultimodalDataset& ds, bool parallel) {
  model.Validate();
  if (ds.num_modalities() != model.num_modalities()) {
    throw Error(ErrorKind::kArity, "dataset has " + std::to_string(ds.num_modalities()) +
                                       " modalities, model expects " +
                                       std::to_string(model.num_modalities()));
  }
  const auto n = static_cast<Eigen::Index>(ds.num_samples());
  Eigen::MatrixXd z(n, static_cast<Eigen::Index>(model.num_modalities()));
  auto run = [&](std::size_t k) {
    z.col(static_cast<Eigen::Index>(k)) = MlpForward(model.encoders[k], ds.block(k)).col(0);
  };
  if (parallel && model.num_modalities() > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t k = 0; k < model.num_modalities(); ++k) workers.emplace_back(run, k);
  } else {
    for (std::size_t k = 0; k < model.num_modalities(); ++k) run(k);
  }
  return z;
}

Eigen::VectorXd Predict(const LateFusionModel& model, const MultimodalDataset& ds) {
  return MlpForward(model.head, Encode(model, ds)).col(0);
}

Eigen::VectorXd Predict(const EarlyFusionModel& model, const MultimodalDataset& ds) {
  return MlpForward(model.model, ds.Concatenated()).col(0);
}

Eigen::VectorXd Predict(const FusionModel& model, const MultimodalDataset& ds) {
  return std::visit([&](const auto& m) { return Predict(m, ds); }, model);
}

LateFusionModel MakeLateFusionMlp(const MultimodalDataset& ds, std::size_t hidden,
                                  std::uint64_t seed) {
  LateFusionModel model;
  for (std::size_t k = 0; k < ds.num_modalities(); ++k) {
    model.encoders.push_back(MlpModel::Random({ds.block_dim(k), hidden, 1}, MixSeed(seed, k)));
  }
  model.head = MlpModel::Random({ds.num_modalities(), 1}, MixSeed(seed, ds.num_modalities()),
                                Activation::kIdentity);
  return model;
}

LateFusionModel MakeLateFusionLinear(const MultimodalDataset& ds, std::uint64_t seed) {
  LateFusionModel model;
  for (std::size_t k = 0; k < ds.num_modalities(); ++k) {
    model.encoders.push_back(
        MlpModel::Random({ds.block_dim(k), 1}, MixSeed(seed, k), Activation::kIdentity));
  }
  model.head = MlpModel::Random({ds.num_modalities(), 1}, MixSeed(seed, ds.num_modalities()),
                                Activation::kIdentity);
  return model;
}

EarlyFusionModel MakeEarlyFusionMlp(const MultimodalDataset& ds, std::size_t hidden,
                                    std::uint64_t seed) {
  return {MlpModel::Random({ds.total_dim(), hidden, 1}, seed)};
}

EarlyFusionModel MakeEarlyFusionLinear(const MultimodalDataset& ds, std::uint64_t seed) {
  return {MlpModel::Random({ds.total_dim(), 1}, seed, Activation::kIdentity)};
}

LinearModel OlsFit(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, double ridge) {
  if (design.rows() < 1) throw Error(ErrorKind::kShape, "OLS needs at least one sample");
  CheckDims(design.rows() == y.size(), "design rows and target length differ");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) {
    throw Error(ErrorKind::kValidation, "ridge must be a finite value >= 0");
  }
  const Eigen::RowVectorXd x_mean = design.colwise().mean();
  const double y_mean = y.mean();
  const Eigen::MatrixXd xc = design.rowwise() - x_mean;
  const Eigen::VectorXd yc = y.array() - y_mean;
  const auto d = design.cols();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(d, d);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
  gram.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = xc.transpose() * yc;

  const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  const bool factored = llt.info() == Eigen::Success;
  if (!factored ||
      llt.matrixLLT().diagonal().array().square().minCoeff() <= 1e-12 * scale) {
    throw Error(ErrorKind::kRankDeficient,
                "normal matrix is singular (design not full column rank after centering); "
                "use a positive ridge");
  }
  LinearModel fit;
  fit.weights = llt.solve(rhs);
  fit.bias = y_mean - x_mean.dot(fit.weights);
  return fit;
}

Eigen::VectorXd OlsObjectiveGradient(const Eigen::MatrixXd& design, const Eigen::VectorXd& y,
                                     double ridge, const LinearModel& fit) {
  const Eigen::VectorXd resid = fit.Predict(design) - y;
  Eigen::VectorXd grad(design.cols() + 1);
  grad.head(design.cols()) = 2.0 * (design.transpose() * resid + ridge * fit.weights);
  grad(design.cols()) = 2.0 * resid.sum();
  return grad;
}

LateFusionModel FitLateFusionOls(const MultimodalDataset& ds, double ridge, bool parallel) {
  const std::size_t k_count = ds.num_modalities();
  std::vector<LinearModel> stage1(k_count);
  std::vector<std::exception_ptr> failures(k_count);
  auto fit_one = [&](std::size_t k) {
    try {
      stage1[k] = OlsFit(ds.block(k), ds.targets(), ridge);
    } catch (...) {
      failures[k] = std::current_exception();
    }
  };
  if (parallel && k_count > 1) {
    std::vector<std::jthread> workers;
    for (std::size_t k = 0; k < k_count; ++k) workers.emplace_back(fit_one, k);
  } else {
    for (std::size_t k = 0; k < k_count; ++k) fit_one(k);
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    if (!failures[k]) continue;
    try {
      std::rethrow_exception(failures[k]);
    } catch (const Error& e) {
      throw Error(e.kind(), "late fusion stage 1, modality '" + ds.modality_names()[k] +
                                "': " + e.what());
    }
  }
  LateFusionModel model;
  for (const auto& fit : stage1) model.encoders.push_back(MlpModel::FromLinear(fit));
  model.head = MlpModel({k_count, 1}, Activation::kIdentity);
  const Eigen::MatrixXd z = Encode(model, ds);
  try {
    model.head = MlpModel::FromLinear(OlsFit(z, ds.targets(), ridge));
  } catch (const Error& e) {
    throw Error(e.kind(), std::string("late fusion stage 2 (fusion head): ") + e.what());
  }
  return model;
}

EarlyFusionModel FitEarlyFusionOls(const MultimodalDataset& ds, double ridge) {
  return {MlpModel::FromLinear(OlsFit(ds.Concatenated(), ds.targets(), ridge))};
}

double MeanSquaredError(const Eigen::VectorXd& predictions, const Eigen::VectorXd& targets) {
  CheckDims(predictions.size() == targets.size(), "prediction and target lengths differ");
  if (predictions.size() == 0) return 0.0;
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.size());
}

double SpectralNorm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

double LipschitzUpperBound(const MlpModel& model) {
  double bound = 1.0;
  for (std::size_t l = 0; l < model.num_layers(); ++l) bound *= SpectralNorm(model.weight(l));
  return bound;
}

double LipschitzUpperBound(const LinearModel& model) { return model.weights.norm(); }

double HeadLipschitzInput(const MlpModel& head, std::size_t k) {
  if (k >= head.input_dim()) throw Error(ErrorKind::kBounds, "head input index out of range");
  double bound = head.weight(0).col(static_cast<Eigen::Index>(k)).norm();
  for (std::size_t l = 1; l < head.num_layers(); ++l) bound *= SpectralNorm(head.weight(l));
  return bound;
}

double LipschitzEstimate(const ScalarFunction& f, const Eigen::MatrixXd& samples,
                         std::size_t pairs, std::uint64_t seed) {
  if (samples.rows() < 2) {
    throw Error(ErrorKind::kDegenerateInput, "Lipschitz estimate needs at least two samples");
  }
  Rng rng(seed);
  const auto n = static_cast<std::uint64_t>(samples.rows());
  double best = 0.0;
  std::size_t used = 0;
  for (std::size_t p = 0; p < pairs; ++p) {
    const auto i = static_cast<Eigen::Index>(rng.Index(n));
    const auto j = static_cast<Eigen::Index>(rng.Index(n));
    const Eigen::VectorXd a = samples.row(i).transpose();
    const Eigen::VectorXd b = samples.row(j).transpose();
    const double dist = (a - b).norm();
    if (dist == 0.0) continue;
    ++used;
    best = std::max(best, std::abs(f(a) - f(b)) / dist);
  }
  if (used == 0) {
    throw Error(ErrorKind::kDegenerateInput, "every sampled pair was a duplicate point");
  }
  return best;
}

double LipschitzEstimate(const MlpModel& model, const Eigen::MatrixXd& samples,
                         std::size_t pairs, std::uint64_t seed) {
  if (model.output_dim() != 1) throw Error(ErrorKind::kShape, "Lipschitz estimate needs a scalar model");
  auto f = [&model](const Eigen::VectorXd& x) {
    return MlpForward(model, x.transpose())(0, 0);
  };
  return LipschitzEstimate(f, samples, pairs, seed);
}

namespace {

json MlpJson(const MlpModel& model) {
  json doc;
  doc["layer_sizes"] = model.layer_sizes();
  doc["activation"] = model.activation() == Activation::kRelu ? "relu" : "identity";
  doc["layers"] = json::array();
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& w = model.weight(l);
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    const auto& b = model.bias(l);
    doc["layers"].push_back({{"rows", w.rows()},
                             {"cols", w.cols()},
                             {"weights", flat},
                             {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  return doc;
}

MlpModel MlpFromJson(const json& doc, const std::string& where) {
  auto fail = [&](const std::string& field, const std::string& what) {
    return Error(ErrorKind::kSchema, where + "." + field + ": " + what);
  };
  if (!doc.is_object()) throw Error(ErrorKind::kSchema, where + ": expected an object");
  if (!doc.contains("layer_sizes") || !doc["layer_sizes"].is_array()) {
    throw fail("layer_sizes", "expected an array");
  }
  const auto sizes = doc["layer_sizes"].get<std::vector<std::size_t>>();
  const std::string act = doc.value("activation", std::string("relu"));
  if (act != "relu" && act != "identity") throw fail("activation", "unknown activation '" + act + "'");
  MlpModel model(sizes, act == "relu" ? Activation::kRelu : Activation::kIdentity);
  if (!doc.contains("layers") || !doc["layers"].is_array() ||
      doc["layers"].size() != model.num_layers()) {
    throw fail("layers", "expected " + std::to_string(model.num_layers()) + " layers");
  }
  for (std::size_t l = 0; l < model.num_layers(); ++l) {
    const auto& layer = doc["layers"][l];
    const std::string lw = "layers[" + std::to_string(l) + "]";
    auto& w = model.mutable_weight(l);
    const auto flat = layer.at("weights").get<std::vector<double>>();
    const auto bias = layer.at("bias").get<std::vector<double>>();
    if (layer.at("rows").get<Eigen::Index>() != w.rows() ||
        layer.at("cols").get<Eigen::Index>() != w.cols() ||
        flat.size() != static_cast<std::size_t>(w.size()) ||
        bias.size() != static_cast<std::size_t>(w.rows())) {
      throw fail(lw, "shape does not match layer_sizes");
    }
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        w(r, c) = flat[static_cast<std::size_t>(r * w.cols() + c)];
      }
    }
    model.mutable_bias(l) = Eigen::Map<const Eigen::VectorXd>(bias.data(), w.rows());
  }
  return model;
}

}  // namespace

std::string MlpToJson(const MlpModel& model) { return MlpJson(model).dump(); }

std::string ModelToJson(const FusionModel& model) {
  json doc;
  doc["format"] = "modro-model";
  doc["version"] = 1;
  if (const auto* late = std::get_if<LateFusionModel>(&model)) {
    doc["kind"] = "late_fusion";
    doc["encoders"] = json::array();
    for (const auto& e : late->encoders) doc["encoders"].push_back(MlpJson(e));
    doc["head"] = MlpJson(late->head);
  } else {
    doc["kind"] = "early_fusion";
    doc["model"] = MlpJson(std::get<EarlyFusionModel>(model).model);
  }
  return doc.dump(2) + "\n";
}

FusionModel ModelFromJson(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("model is not valid JSON: ") + e.what());
  }
  if (doc.value("format", std::string()) != "modro-model") {
    throw Error(ErrorKind::kSchema, "model.format: expected \"modro-model\"");
  }
  if (doc.value("version", 0) != 1) throw Error(ErrorKind::kSchema, "model.version: expected 1");
  try {
    const std::string kind = doc.value("kind", std::string());
    if (kind == "late_fusion") {
      LateFusionModel late;
      const auto& encoders = doc.at("encoders");
      for (std::size_t k = 0; k < encoders.size(); ++k) {
        late.encoders.push_back(MlpFromJson(encoders[k], "model.encoders[" + std::to_string(k) + "]"));
      }
      late.head = MlpFromJson(doc.at("head"), "model.head");
      late.Validate();
      return late;
    }
    if (kind == "early_fusion") return EarlyFusionModel{MlpFromJson(doc.at("model"), "model.model")};
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchema, std::string("model document: ") + e.what());
  }
  throw Error(ErrorKind::kSchema, "model.kind: expected late_fusion or early_fusion");
}

}  // namespace modro
