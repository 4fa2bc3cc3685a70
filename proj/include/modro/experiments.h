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

#ifndef MODRO_EXPERIMENTS_H_
#define MODRO_EXPERIMENTS_H_

#include <cstdint>
#include <type_traits>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "modro/certificates.h"

namespace modro {

static_assert(std::is_same_v<std::size_t, std::uint64_t>,
              "config slots assume a 64-bit size_t");

// ---- Config overrides -------------------------------------------------------

// A named, typed slot that a JSON config may overwrite.
struct ConfigField {
  std::string name;
  // std::size_t and its vector share the std::uint64_t slots on LP64.
  std::variant<double*, std::int64_t*, std::uint64_t*, int*, bool*, std::string*,
               std::vector<double>*, std::vector<std::uint64_t>*>
      target;
};

// Overwrites every field present in `doc`. Unknown keys and type mismatches
// raise kSchema with the offending path.
void ApplyConfig(const nlohmann::json& doc, const std::vector<ConfigField>& fields);

std::vector<double> ParseDoubleList(const std::string& text);
std::vector<std::uint64_t> SeedRange(std::size_t count);

// ---- ERM vs DRO under a test-time shift ----------------------------------

struct Table1Config {
  std::vector<double> rhos{0.1, 0.5, 1.2, 2.0};
  std::vector<std::uint64_t> seeds = SeedRange(30);
  std::size_t n_train = 20000;
  std::size_t n_test = 5000;
  std::size_t hidden = 64;
  int epochs = 100;
  std::size_t batch_size = 128;
  double learning_rate = 0.005;
  double train_shift = 0.0;
  double test_shift = 1.5;
  bool radius_is_total = false;
  std::size_t threads = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
};

struct Table1Cell {
  double rho = 0.0;
  std::uint64_t seed = 0;
  double radius = 0.0;
  double whole_erm = 0.0;
  double whole_dro = 0.0;
  double minor_erm = 0.0;
  double minor_dro = 0.0;
  bool ok = false;
  std::string diagnostic;
};

struct MeanSpread {
  double mean = 0.0;
  double se = 0.0;
  double sd = 0.0;
};

struct Table1Row {
  double rho = 0.0;
  MeanSpread whole_erm, whole_dro, minor_erm, minor_dro;
  std::size_t seeds = 0;
};

struct Table1Result {
  std::vector<Table1Row> rows;
  std::vector<Table1Cell> cells;
  nlohmann::json stamp;
};

// Per seed: ERM is trained once, then one DRO model per rho from the same
// initialization. Under the per-modality reading gamma is the Spearman
// correlation of the ERM model's training embeddings. Seeds run on
// `threads` workers; a failed cell is logged and left out of aggregation.
Table1Result RunTable1(const Table1Config& cfg);
MeanSpread Summarize(const std::vector<double>& values);
std::string Table1ToCsv(const Table1Result& result);
std::string Table1CellsToCsv(const Table1Result& result);

// ---- Chi-square vs correlation ---------------------------------------------

struct Chi2StudyRow {
  double c = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double min = 0.0;
  double max = 0.0;
};

std::vector<Chi2StudyRow> RunChi2Study(const std::vector<double>& correlations,
                                       std::size_t trials, std::uint64_t seed,
                                       double z_scale = 0.5);
std::string Chi2StudyToCsv(const std::vector<Chi2StudyRow>& rows, const nlohmann::json& stamp);

// ---- Certificate experiments -------------------------------------------------

struct CoverageStudyConfig {
  std::vector<std::size_t> ns{100, 1000};
  std::vector<double> ts{1.0, 2.0, 3.0};
  std::size_t trials = 2000;
  double p = 0.5;
  double loss_high = 1.0;
  double radius = 1.0;
  double c_const = 1.0;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

struct CoverageStudyRow {
  std::size_t n = 0;
  double t = 0.0;
  CoverageReport report;
};

std::vector<CoverageStudyRow> RunCoverage(const CoverageStudyConfig& cfg);
std::string CoverageToCsv(const std::vector<CoverageStudyRow>& rows, const nlohmann::json& stamp);

struct EncoderStudyConfig {
  std::size_t n_fit = 5000;
  std::size_t n_sample = 1000;
  std::size_t n_population = 20000;
  std::size_t modality = 0;
  double scale = 0.1;
  double radius = 1.0;
  double t = 3.0;
  std::size_t trials = 50;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

struct EncoderStudyResult {
  EncoderReport chi_square;
  EncoderReport wasserstein;
};

// Fits a linear late fusion model by OLS on simulation data, then runs both
// encoder perturbation experiments against a large population proxy.
EncoderStudyResult RunEncoderBound(const EncoderStudyConfig& cfg);
std::string EncoderBoundToCsv(const EncoderStudyResult& result, const nlohmann::json& stamp);

struct LecamStudyConfig {
  double l_bound = 1.0;
  double m_param = 10.0;
  std::vector<std::size_t> ns{100, 1000};
  std::size_t trials = 5000;
  double radius = 1.0;
  std::uint64_t seed = 0;

  nlohmann::json ToJson() const;
};

struct LecamStudyRow {
  std::size_t n = 0;
  LecamReport report;
};

std::vector<LecamStudyRow> RunLecam(const LecamStudyConfig& cfg);
std::string LecamToCsv(const std::vector<LecamStudyRow>& rows, const nlohmann::json& stamp);

// ---- Rendering --------------------------------------------------------------

// Comment lines ("# ...") carry the config stamp.
std::string StampLines(const nlohmann::json& stamp);

// Markdown table of a result CSV. Stamp lines are skipped and cell text is
// copied verbatim, so numbers parse back to the CSV values.
std::string RenderMarkdown(const std::string& csv_text);

}  // namespace modro

#endif  // MODRO_EXPERIMENTS_H_
