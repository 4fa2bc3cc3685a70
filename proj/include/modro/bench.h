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

#ifndef MODRO_BENCH_H_
#define MODRO_BENCH_H_

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "modro/data.h"

namespace modro {

struct BenchSize {
  std::size_t n = 1;
  std::size_t k = 1;
  std::size_t d = 1;

  std::size_t total_dim() const { return k * d; }
};

struct BenchConfig {
  std::vector<BenchSize> grid;
  int repetitions = 5;
  int warmup = 1;
  bool parallel = false;
  // Worker count for the parallel mode; 0 means one per modality.
  std::size_t threads = 0;
  std::uint64_t seed = 0;

  void Validate() const;
};

// Parses a grid given as [{"n":..,"k":..,"d":..}, ...].
std::vector<BenchSize> BenchGridFromJson(const nlohmann::json& doc);

struct BenchRow {
  std::string mode;    // "ols" or "sgd"
  std::string fusion;  // "early", "late" or "late_parallel"
  BenchSize size;
  double median_seconds = 0.0;
  double mad_seconds = 0.0;
  double flops = 0.0;
};

// Keeps the timed solves well posed when N < D; it does not change their cost.
inline constexpr double kBenchRidge = 1e-3;

inline constexpr double kBenchMemoryLimitBytes = 2.0 * 1024 * 1024 * 1024;

// Normal-equation flop counts: N D^2 + D^3 for early fusion and
// sum_i (N d_i^2 + d_i^3) + N K^2 + K^3 for late fusion.
double EarlyOlsFlops(const BenchSize& s);
double LateOlsFlops(const BenchSize& s);
// Per-epoch SGD work: N D for early fusion, N (D + K) for late fusion.
double EarlySgdFlops(const BenchSize& s);
double LateSgdFlops(const BenchSize& s);

// Rough resident-memory estimate for one benchmark cell; throws kCapacity
// above kBenchMemoryLimitBytes.
double BenchMemoryEstimate(const BenchSize& s);

// Random Gaussian blocks with a noisy linear response.
MultimodalDataset MakeBenchDataset(const BenchSize& s, std::uint64_t seed);

std::vector<BenchRow> BenchOls(const BenchConfig& cfg);
std::vector<BenchRow> BenchSgdEpoch(const BenchConfig& cfg);

// One epoch of plain minibatch SGD on a linear late-fusion model. With
// workers > 1 each worker owns a disjoint set of modalities and the head
// update happens at a barrier.
void LateFusionSgdEpoch(const MultimodalDataset& ds, std::vector<Eigen::VectorXd>* encoders,
                        Eigen::VectorXd* head, double learning_rate, std::size_t batch_size,
                        std::size_t workers);
void EarlyFusionSgdEpoch(const RowMatrix& x, const Eigen::VectorXd& y, Eigen::VectorXd* weights,
                         double learning_rate, std::size_t batch_size);

double MedianAbsoluteDeviation(const std::vector<double>& values);
// Least-squares slope of log(y) on log(x).
double LogLogSlope(const std::vector<double>& x, const std::vector<double>& y);

std::string BenchRowsToCsv(const std::vector<BenchRow>& rows);

}  // namespace modro

#endif  // MODRO_BENCH_H_
