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

#include "modro/bench.h"

#include <algorithm>
#include <barrier>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "modro/dro.h"
#include "modro/error.h"
#include "modro/models.h"
#include "modro/rng.h"

namespace modro {
namespace {

constexpr std::size_t kBenchBatch = 128;
constexpr double kBenchLearningRate = 1e-3;

double Seconds(const std::function<void()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

BenchRow TimeCell(const BenchConfig& cfg, std::string mode, std::string fusion,
                  const BenchSize& size, double flops, const std::function<void()>& fn) {
  for (int i = 0; i < cfg.warmup; ++i) fn();
  std::vector<double> times;
  for (int i = 0; i < cfg.repetitions; ++i) times.push_back(Seconds(fn));
  BenchRow row;
  row.mode = std::move(mode);
  row.fusion = std::move(fusion);
  row.size = size;
  row.median_seconds = std::max(Median(times), std::numeric_limits<double>::min());
  row.mad_seconds = MedianAbsoluteDeviation(times);
  row.flops = flops;
  return row;
}

}  // namespace

void BenchConfig::Validate() const {
  if (grid.empty()) throw Error(ErrorKind::kValidation, "bench grid is empty");
  if (repetitions < 3) throw Error(ErrorKind::kValidation, "repetitions must be at least 3");
  if (warmup < 0) throw Error(ErrorKind::kValidation, "warmup must be nonnegative");
  for (const BenchSize& s : grid) {
    if (s.n < 1 || s.k < 1 || s.d < 1) {
      throw Error(ErrorKind::kValidation, "bench sizes must be at least 1");
    }
  }
}

std::vector<BenchSize> BenchGridFromJson(const nlohmann::json& doc) {
  if (!doc.is_array()) throw Error(ErrorKind::kSchema, "$: grid must be an array");
  std::vector<BenchSize> grid;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const nlohmann::json& cell = doc[i];
    const std::string path = "$[" + std::to_string(i) + "]";
    if (!cell.is_object()) throw Error(ErrorKind::kSchema, path + ": expected object");
    BenchSize s;
    for (const char* key : {"n", "k", "d"}) {
      if (!cell.contains(key) || !cell.at(key).is_number_integer() ||
          cell.at(key).get<long long>() < 1) {
        throw Error(ErrorKind::kSchema, path + "." + key + ": expected positive integer");
      }
    }
    s.n = cell.at("n").get<std::size_t>();
    s.k = cell.at("k").get<std::size_t>();
    s.d = cell.at("d").get<std::size_t>();
    grid.push_back(s);
  }
  return grid;
}

double EarlyOlsFlops(const BenchSize& s) {
  const double n = static_cast<double>(s.n);
  const double dim = static_cast<double>(s.total_dim());
  return n * dim * dim + dim * dim * dim;
}

double LateOlsFlops(const BenchSize& s) {
  const double n = static_cast<double>(s.n);
  const double k = static_cast<double>(s.k);
  const double d = static_cast<double>(s.d);
  return k * (n * d * d + d * d * d) + n * k * k + k * k * k;
}

double EarlySgdFlops(const BenchSize& s) {
  return static_cast<double>(s.n) * static_cast<double>(s.total_dim());
}

double LateSgdFlops(const BenchSize& s) {
  return static_cast<double>(s.n) * static_cast<double>(s.total_dim() + s.k);
}

double BenchMemoryEstimate(const BenchSize& s) {
  const double n = static_cast<double>(s.n);
  const double dim = static_cast<double>(s.total_dim());
  // Blocks, the concatenated copy, the centered design, and the Gram matrix.
  const double bytes = 8.0 * (3.0 * n * dim + 2.0 * dim * dim + 4.0 * n);
  if (bytes > kBenchMemoryLimitBytes) {
    throw Error(ErrorKind::kCapacity,
                "benchmark cell n=" + std::to_string(s.n) + " D=" +
                    std::to_string(s.total_dim()) + " needs about " +
                    std::to_string(bytes / (1024.0 * 1024.0)) + " MiB, above the 2 GiB guard");
  }
  return bytes;
}

MultimodalDataset MakeBenchDataset(const BenchSize& s, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RowMatrix> blocks(s.k, RowMatrix(s.n, s.d));
  Eigen::VectorXd y = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(s.n));
  for (RowMatrix& b : blocks) {
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        b(i, j) = rng.Normal();
        y(i) += b(i, j);
      }
    }
  }
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) += 0.1 * rng.Normal();
  return MultimodalDataset(std::move(blocks), std::move(y));
}

std::vector<BenchRow> BenchOls(const BenchConfig& cfg) {
  cfg.Validate();
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    const BenchSize& s = cfg.grid[i];
    BenchMemoryEstimate(s);
    const MultimodalDataset ds = MakeBenchDataset(s, MixSeed(cfg.seed, i));
    rows.push_back(TimeCell(cfg, "ols", "early", s, EarlyOlsFlops(s),
                            [&] { FitEarlyFusionOls(ds, kBenchRidge); }));
    rows.push_back(TimeCell(cfg, "ols", "late", s, LateOlsFlops(s),
                            [&] { FitLateFusionOls(ds, kBenchRidge); }));
    if (cfg.parallel) {
      rows.push_back(TimeCell(cfg, "ols", "late_parallel", s, LateOlsFlops(s),
                              [&] { FitLateFusionOls(ds, kBenchRidge, true); }));
    }
  }
  return rows;
}

void EarlyFusionSgdEpoch(const RowMatrix& x, const Eigen::VectorXd& y, Eigen::VectorXd* weights,
                         double learning_rate, std::size_t batch_size) {
  const Eigen::Index n = x.rows();
  const Eigen::Index bs = static_cast<Eigen::Index>(batch_size);
  for (Eigen::Index start = 0; start < n; start += bs) {
    const Eigen::Index len = std::min(bs, n - start);
    const auto xb = x.middleRows(start, len);
    const Eigen::VectorXd resid = xb * (*weights) - y.segment(start, len);
    weights->noalias() -= (learning_rate / static_cast<double>(len)) * (xb.transpose() * resid);
  }
}

void LateFusionSgdEpoch(const MultimodalDataset& ds, std::vector<Eigen::VectorXd>* encoders,
                        Eigen::VectorXd* head, double learning_rate, std::size_t batch_size,
                        std::size_t workers) {
  const std::size_t k_count = ds.num_modalities();
  if (encoders->size() != k_count || static_cast<std::size_t>(head->size()) != k_count + 1) {
    throw Error(ErrorKind::kShape, "late fusion SGD state does not match the dataset");
  }
  const Eigen::Index n = static_cast<Eigen::Index>(ds.num_samples());
  const Eigen::Index bs = static_cast<Eigen::Index>(batch_size);
  const Eigen::VectorXd& y = ds.targets();
  Eigen::MatrixXd z(bs, static_cast<Eigen::Index>(k_count));
  Eigen::VectorXd resid(bs);
  Eigen::VectorXd head_before(head->size());
  Eigen::Index start = 0;
  Eigen::Index len = 0;

  auto encode = [&](std::size_t k) {
    z.col(static_cast<Eigen::Index>(k)).head(len).noalias() =
        ds.block(k).middleRows(start, len) * (*encoders)[k];
  };
  // Head step: residuals, then the head update from the pre-update weights.
  auto fuse = [&]() noexcept {
    const double bias = (*head)(static_cast<Eigen::Index>(k_count));
    resid.head(len) = z.topRows(len) * head->head(static_cast<Eigen::Index>(k_count));
    resid.head(len).array() += bias;
    resid.head(len) -= y.segment(start, len);
    head_before = *head;
    const double step = learning_rate / static_cast<double>(len);
    head->head(static_cast<Eigen::Index>(k_count)).noalias() -=
        step * (z.topRows(len).transpose() * resid.head(len));
    (*head)(static_cast<Eigen::Index>(k_count)) -= step * resid.head(len).sum();
  };
  auto update = [&](std::size_t k) {
    const double scale = learning_rate * head_before(static_cast<Eigen::Index>(k)) /
                         static_cast<double>(len);
    (*encoders)[k].noalias() -=
        scale * (ds.block(k).middleRows(start, len).transpose() * resid.head(len));
  };

  if (workers <= 1) {
    for (start = 0; start < n; start += bs) {
      len = std::min(bs, n - start);
      for (std::size_t k = 0; k < k_count; ++k) encode(k);
      fuse();
      for (std::size_t k = 0; k < k_count; ++k) update(k);
    }
    return;
  }

  const std::size_t w_count = std::min(workers, k_count);
  std::barrier sync(static_cast<std::ptrdiff_t>(w_count), fuse);
  std::barrier step_done(static_cast<std::ptrdiff_t>(w_count), [&]() noexcept {
    start += bs;
    len = std::min(bs, n - start);
  });
  len = std::min(bs, n);
  const Eigen::Index batches = (n + bs - 1) / bs;
  auto worker = [&](std::size_t id) {
    for (Eigen::Index b = 0; b < batches; ++b) {
      for (std::size_t k = id; k < k_count; k += w_count) encode(k);
      sync.arrive_and_wait();
      for (std::size_t k = id; k < k_count; k += w_count) update(k);
      step_done.arrive_and_wait();
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t id = 1; id < w_count; ++id) pool.emplace_back(worker, id);
  worker(0);
}

std::vector<BenchRow> BenchSgdEpoch(const BenchConfig& cfg) {
  cfg.Validate();
  std::vector<BenchRow> rows;
  for (std::size_t i = 0; i < cfg.grid.size(); ++i) {
    const BenchSize& s = cfg.grid[i];
    BenchMemoryEstimate(s);
    const MultimodalDataset ds = MakeBenchDataset(s, MixSeed(cfg.seed, i));
    const RowMatrix x = ds.Concatenated();
    const Eigen::Index dim = static_cast<Eigen::Index>(s.total_dim());

    Eigen::VectorXd w_early = Eigen::VectorXd::Zero(dim);
    rows.push_back(TimeCell(cfg, "sgd", "early", s, EarlySgdFlops(s), [&] {
      EarlyFusionSgdEpoch(x, ds.targets(), &w_early, kBenchLearningRate, kBenchBatch);
    }));

    auto late = [&](std::size_t workers) {
      std::vector<Eigen::VectorXd> enc(s.k, Eigen::VectorXd::Constant(
                                                static_cast<Eigen::Index>(s.d), 0.1));
      Eigen::VectorXd head = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(s.k + 1), 0.1);
      return [&ds, enc, head, workers]() mutable {
        LateFusionSgdEpoch(ds, &enc, &head, kBenchLearningRate, kBenchBatch, workers);
      };
    };
    rows.push_back(TimeCell(cfg, "sgd", "late", s, LateSgdFlops(s), late(1)));
    if (cfg.parallel) {
      const std::size_t workers = cfg.threads == 0 ? s.k : cfg.threads;
      rows.push_back(TimeCell(cfg, "sgd", "late_parallel", s, LateSgdFlops(s), late(workers)));
    }
  }
  return rows;
}

double MedianAbsoluteDeviation(const std::vector<double>& values) {
  if (values.empty()) return 0.0;
  const double m = Median(values);
  std::vector<double> dev;
  dev.reserve(values.size());
  for (double v : values) dev.push_back(std::abs(v - m));
  return Median(std::move(dev));
}

double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorKind::kValidation, "log-log slope needs at least two matching points");
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) {
      throw Error(ErrorKind::kValidation, "log-log slope needs positive values");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw Error(ErrorKind::kValidation, "log-log slope needs distinct x values");
  return sxy / sxx;
}

std::string BenchRowsToCsv(const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "mode,fusion,n,k,d,D,median_seconds,mad_seconds,flops\n";
  for (const BenchRow& r : rows) {
    out << r.mode << ',' << r.fusion << ',' << r.size.n << ',' << r.size.k << ',' << r.size.d
        << ',' << r.size.total_dim() << ',' << FormatDouble(r.median_seconds, 9) << ','
        << FormatDouble(r.mad_seconds, 9) << ',' << FormatDouble(r.flops, 17) << '\n';
  }
  return out.str();
}

}  // namespace modro
