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

#include "modro/experiments.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "modro/ambiguity.h"
#include "modro/dro.h"
#include "modro/error.h"
#include "modro/models.h"
#include "modro/rng.h"
#include "modro/synthetic.h"

namespace modro {
namespace {

[[noreturn]] void SchemaError(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::kSchema, path + ": " + what);
}

template <typename T>
T ReadUnsigned(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    SchemaError(path, "expected nonnegative integer");
  }
  return v.get<T>();
}

double ReadNumber(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) SchemaError(path, "expected number");
  return v.get<double>();
}

template <typename T, typename Read>
std::vector<T> ReadArray(const nlohmann::json& v, const std::string& path, Read read) {
  if (!v.is_array()) SchemaError(path, "expected array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(read(v[i], path + "[" + std::to_string(i) + "]"));
  }
  return out;
}

// Mean squared error over all samples and over the minority mask.
void EvaluateMse(const FusionModel& model, const MultimodalDataset& test,
                 const std::vector<bool>& mask, double* whole, double* minor) {
  const Eigen::VectorXd pred = Predict(model, test);
  double all = 0.0, sub = 0.0;
  std::size_t count = 0;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const double r = pred(i) - test.targets()(i);
    all += r * r;
    if (mask[static_cast<std::size_t>(i)]) {
      sub += r * r;
      ++count;
    }
  }
  *whole = all / static_cast<double>(pred.size());
  *minor = count == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : sub / static_cast<double>(count);
}

std::string Num(double v) { return FormatDouble(v, 10); }

}  // namespace

void ApplyConfig(const nlohmann::json& doc, const std::vector<ConfigField>& fields) {
  if (!doc.is_object()) SchemaError("$", "expected object");
  for (const auto& [key, value] : doc.items()) {
    const std::string path = "$." + key;
    const auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const ConfigField& f) { return f.name == key; });
    if (it == fields.end()) SchemaError(path, "unknown field");
    std::visit(
        [&](auto* target) {
          using T = std::remove_pointer_t<decltype(target)>;
          if constexpr (std::is_same_v<T, double>) {
            *target = ReadNumber(value, path);
          } else if constexpr (std::is_same_v<T, bool>) {
            if (!value.is_boolean()) SchemaError(path, "expected boolean");
            *target = value.get<bool>();
          } else if constexpr (std::is_same_v<T, std::string>) {
            if (!value.is_string()) SchemaError(path, "expected string");
            *target = value.get<std::string>();
          } else if constexpr (std::is_same_v<T, std::int64_t>) {
            if (!value.is_number_integer()) SchemaError(path, "expected integer");
            *target = value.get<std::int64_t>();
          } else if constexpr (std::is_same_v<T, int>) {
            if (!value.is_number_integer()) SchemaError(path, "expected integer");
            *target = value.get<int>();
          } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            *target = ReadArray<double>(value, path, ReadNumber);
          } else if constexpr (std::is_same_v<T, std::vector<std::uint64_t>>) {
            *target = ReadArray<std::uint64_t>(value, path, ReadUnsigned<std::uint64_t>);
          } else {
            *target = ReadUnsigned<T>(value, path);
          }
        },
        it->target);
  }
}

std::vector<double> ParseDoubleList(const std::string& text) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = std::min(text.find(',', pos), text.size());
    std::string item = text.substr(pos, comma - pos);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw Error(ErrorKind::kParse, "cannot parse number '" + item + "' in list '" + text + "'");
    }
    out.push_back(v);
    pos = comma + 1;
  }
  return out;
}

std::vector<std::uint64_t> SeedRange(std::size_t count) {
  std::vector<std::uint64_t> seeds(count);
  for (std::size_t i = 0; i < count; ++i) seeds[i] = i;
  return seeds;
}

void Table1Config::Validate() const {
  if (rhos.empty()) throw Error(ErrorKind::kValidation, "at least one rho is required");
  for (double r : rhos) {
    if (!std::isfinite(r) || r <= 0.0) throw Error(ErrorKind::kValidation, "rho must be positive");
  }
  if (seeds.empty()) throw Error(ErrorKind::kValidation, "at least one seed is required");
  if (n_train < 2 || n_test < 1 || hidden < 1 || epochs < 1 || batch_size < 2) {
    throw Error(ErrorKind::kValidation, "table1 sizes must be positive");
  }
  if (!(learning_rate > 0.0)) throw Error(ErrorKind::kValidation, "learning rate must be positive");
}

nlohmann::json Table1Config::ToJson() const {
  return {{"experiment", "table1"},   {"rhos", rhos},
          {"seeds", seeds},           {"n_train", n_train},
          {"n_test", n_test},         {"hidden", hidden},
          {"epochs", epochs},         {"batch_size", batch_size},
          {"learning_rate", learning_rate}, {"train_shift", train_shift},
          {"test_shift", test_shift}, {"radius_is_total", radius_is_total},
          {"rng", kRngName}};
}

MeanSpread Summarize(const std::vector<double>& values) {
  MeanSpread s;
  if (values.empty()) {
    s.mean = s.se = s.sd = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    s.se = s.sd / std::sqrt(static_cast<double>(values.size()));
  }
  return s;
}

Table1Result RunTable1(const Table1Config& cfg) {
  cfg.Validate();
  const std::size_t n_rho = cfg.rhos.size();
  std::vector<Table1Cell> cells(cfg.seeds.size() * n_rho);
  std::mutex log_mutex;

  auto run_seed = [&](std::size_t si) {
    const std::uint64_t seed = cfg.seeds[si];
    for (std::size_t r = 0; r < n_rho; ++r) {
      cells[si * n_rho + r].rho = cfg.rhos[r];
      cells[si * n_rho + r].seed = seed;
    }
    auto fail_all = [&](const std::string& why) {
      for (std::size_t r = 0; r < n_rho; ++r) cells[si * n_rho + r].diagnostic = why;
      std::lock_guard<std::mutex> lock(log_mutex);
      std::fprintf(stderr, "table1: seed %llu failed: %s\n",
                   static_cast<unsigned long long>(seed), why.c_str());
    };
    SimConfig train_cfg;
    train_cfg.n = cfg.n_train;
    train_cfg.shift = cfg.train_shift;
    train_cfg.seed = MixSeed(seed, 1);
    SimConfig test_cfg = train_cfg;
    test_cfg.n = cfg.n_test;
    test_cfg.shift = cfg.test_shift;
    test_cfg.seed = MixSeed(seed, 2);
    const MultimodalDataset train = GenSimulation(train_cfg);
    const MultimodalDataset test = GenSimulation(test_cfg);
    const std::vector<bool> mask = MinorityMask(test);
    const FusionModel init(MakeLateFusionMlp(train, cfg.hidden, MixSeed(seed, 3)));
    OptConfig opt;
    opt.epochs = cfg.epochs;
    opt.batch_size = cfg.batch_size;
    opt.learning_rate = cfg.learning_rate;
    opt.seed = MixSeed(seed, 4);

    TrainResult erm;
    Eigen::MatrixXd gamma;
    try {
      erm = Train(init, train, Objective::Erm(), opt);
      if (!cfg.radius_is_total) {
        gamma = EstimateGamma(Encode(std::get<LateFusionModel>(erm.model), train),
                              train.modality_names());
      }
    } catch (const Error& e) {
      fail_all(std::string("erm: ") + e.what());
      return;
    }
    double whole_erm = 0.0, minor_erm = 0.0;
    EvaluateMse(erm.model, test, mask, &whole_erm, &minor_erm);

    for (std::size_t r = 0; r < n_rho; ++r) {
      Table1Cell& cell = cells[si * n_rho + r];
      cell.whole_erm = whole_erm;
      cell.minor_erm = minor_erm;
      try {
        cell.radius = cfg.radius_is_total
                          ? cfg.rhos[r]
                          : ComputeRadius(AmbiguitySpec::Uniform(cfg.rhos[r], gamma)).value;
        const TrainResult dro = Train(init, train, Objective::Chi2Dro(cell.radius), opt);
        EvaluateMse(dro.model, test, mask, &cell.whole_dro, &cell.minor_dro);
        cell.ok = true;
      } catch (const Error& e) {
        cell.diagnostic = std::string("dro: ") + e.what();
        std::lock_guard<std::mutex> lock(log_mutex);
        std::fprintf(stderr, "table1: rho %g seed %llu failed: %s\n", cfg.rhos[r],
                     static_cast<unsigned long long>(seed), e.what());
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(cfg.threads, cfg.seeds.size()));
  std::atomic<std::size_t> next{0};
  auto drain = [&] {
    for (std::size_t si = next++; si < cfg.seeds.size(); si = next++) run_seed(si);
  };
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(drain);
    drain();
  }

  Table1Result result;
  result.stamp = cfg.ToJson();
  for (std::size_t r = 0; r < n_rho; ++r) {
    std::vector<double> we, wd, me, md;
    for (std::size_t si = 0; si < cfg.seeds.size(); ++si) {
      const Table1Cell& c = cells[si * n_rho + r];
      if (!c.ok) continue;
      we.push_back(c.whole_erm);
      wd.push_back(c.whole_dro);
      if (std::isfinite(c.minor_erm) && std::isfinite(c.minor_dro)) {
        me.push_back(c.minor_erm);
        md.push_back(c.minor_dro);
      }
    }
    Table1Row row;
    row.rho = cfg.rhos[r];
    row.whole_erm = Summarize(we);
    row.whole_dro = Summarize(wd);
    row.minor_erm = Summarize(me);
    row.minor_dro = Summarize(md);
    row.seeds = we.size();
    result.rows.push_back(row);
  }
  result.cells = std::move(cells);
  return result;
}

std::string StampLines(const nlohmann::json& stamp) {
  return "# config: " + stamp.dump() + "\n";
}

std::string Table1ToCsv(const Table1Result& result) {
  std::ostringstream out;
  out << StampLines(result.stamp);
  out << "rho,whole_mse_erm,whole_mse_erm_se,whole_mse_dro,whole_mse_dro_se,minor_mse_erm,"
         "minor_mse_erm_se,minor_mse_dro,minor_mse_dro_se,seeds,whole_mse_erm_sd,"
         "whole_mse_dro_sd,minor_mse_erm_sd,minor_mse_dro_sd\n";
  for (const Table1Row& r : result.rows) {
    out << Num(r.rho) << ',' << Num(r.whole_erm.mean) << ',' << Num(r.whole_erm.se) << ','
        << Num(r.whole_dro.mean) << ',' << Num(r.whole_dro.se) << ',' << Num(r.minor_erm.mean)
        << ',' << Num(r.minor_erm.se) << ',' << Num(r.minor_dro.mean) << ','
        << Num(r.minor_dro.se) << ',' << r.seeds << ',' << Num(r.whole_erm.sd) << ','
        << Num(r.whole_dro.sd) << ',' << Num(r.minor_erm.sd) << ',' << Num(r.minor_dro.sd)
        << '\n';
  }
  return out.str();
}

std::string Table1CellsToCsv(const Table1Result& result) {
  std::ostringstream out;
  out << StampLines(result.stamp);
  out << "rho,seed,radius,whole_mse_erm,whole_mse_dro,minor_mse_erm,minor_mse_dro,ok,"
         "diagnostic\n";
  for (const Table1Cell& c : result.cells) {
    out << Num(c.rho) << ',' << c.seed << ',' << Num(c.radius) << ',' << Num(c.whole_erm) << ','
        << Num(c.whole_dro) << ',' << Num(c.minor_erm) << ',' << Num(c.minor_dro) << ','
        << (c.ok ? 1 : 0) << ',' << CsvEscape(c.diagnostic) << '\n';
  }
  return out.str();
}

std::vector<Chi2StudyRow> RunChi2Study(const std::vector<double>& correlations,
                                       std::size_t trials, std::uint64_t seed, double z_scale) {
  if (trials == 0) throw Error(ErrorKind::kValidation, "trials must be positive");
  std::vector<Chi2StudyRow> rows;
  for (std::size_t ci = 0; ci < correlations.size(); ++ci) {
    std::vector<double> values(trials);
    for (std::size_t t = 0; t < trials; ++t) {
      const GaussianPair pair = GenGaussianPair(correlations[ci], 1.0, 1.0, z_scale,
                                                MixSeed(MixSeed(seed, ci), t));
      values[t] = Chi2GaussianMeanShift(pair);
    }
    const MeanSpread s = Summarize(values);
    Chi2StudyRow row;
    row.c = correlations[ci];
    row.mean = s.mean;
    row.sd = s.sd;
    row.min = *std::min_element(values.begin(), values.end());
    row.max = *std::max_element(values.begin(), values.end());
    rows.push_back(row);
  }
  return rows;
}

std::string Chi2StudyToCsv(const std::vector<Chi2StudyRow>& rows, const nlohmann::json& stamp) {
  std::ostringstream out;
  out << StampLines(stamp) << "c,mean,std,min,max\n";
  for (const Chi2StudyRow& r : rows) {
    out << Num(r.c) << ',' << Num(r.mean) << ',' << Num(r.sd) << ',' << Num(r.min) << ','
        << Num(r.max) << '\n';
  }
  return out.str();
}

nlohmann::json CoverageStudyConfig::ToJson() const {
  return {{"experiment", "coverage"}, {"ns", ns},        {"ts", ts},
          {"trials", trials},         {"p", p},          {"loss_high", loss_high},
          {"radius", radius},         {"c_const", c_const}, {"seed", seed},
          {"rng", kRngName}};
}

std::vector<CoverageStudyRow> RunCoverage(const CoverageStudyConfig& cfg) {
  LossDistribution dist{{0.0, cfg.loss_high}, {1.0 - cfg.p, cfg.p}};
  std::vector<CoverageStudyRow> rows;
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    for (std::size_t j = 0; j < cfg.ts.size(); ++j) {
      CoverageStudyRow row;
      row.n = cfg.ns[i];
      row.t = cfg.ts[j];
      row.report = CoverageExperiment(dist, cfg.radius, row.n, row.t, cfg.trials,
                                      MixSeed(MixSeed(cfg.seed, i), j), cfg.c_const);
      rows.push_back(row);
    }
  }
  return rows;
}

std::string CoverageToCsv(const std::vector<CoverageStudyRow>& rows, const nlohmann::json& stamp) {
  std::ostringstream out;
  out << StampLines(stamp)
      << "n,t,trials,violations,frequency,tolerance,bound,max_gap,population_risk,passed\n";
  for (const CoverageStudyRow& r : rows) {
    out << r.n << ',' << Num(r.t) << ',' << r.report.trials << ',' << r.report.violations << ','
        << Num(r.report.frequency) << ',' << Num(r.report.tolerance) << ','
        << Num(r.report.bound.value) << ',' << Num(r.report.max_gap) << ','
        << Num(r.report.population_risk) << ',' << (r.report.passed ? 1 : 0) << '\n';
  }
  return out.str();
}

nlohmann::json EncoderStudyConfig::ToJson() const {
  return {{"experiment", "encoder-bound"}, {"n_fit", n_fit},
          {"n_sample", n_sample},          {"n_population", n_population},
          {"modality", modality},          {"scale", scale},
          {"radius", radius},              {"t", t},
          {"trials", trials},              {"seed", seed},
          {"rng", kRngName}};
}

EncoderStudyResult RunEncoderBound(const EncoderStudyConfig& cfg) {
  SimConfig sim;
  sim.n = cfg.n_fit;
  sim.seed = MixSeed(cfg.seed, 1);
  const LateFusionModel base = FitLateFusionOls(GenSimulation(sim));
  sim.n = cfg.n_sample;
  sim.seed = MixSeed(cfg.seed, 2);
  const MultimodalDataset sample = GenSimulation(sim);
  sim.n = cfg.n_population;
  sim.seed = MixSeed(cfg.seed, 3);
  const MultimodalDataset population = GenSimulation(sim);

  EncoderExperimentConfig exp;
  exp.modality = cfg.modality;
  exp.scale = cfg.scale;
  exp.radius = cfg.radius;
  exp.t = cfg.t;
  exp.trials = cfg.trials;
  exp.seed = MixSeed(cfg.seed, 4);
  EncoderStudyResult result;
  exp.kind = EncoderBoundKind::kChiSquare;
  result.chi_square = EncoderPerturbationExperiment(base, sample, population, exp);
  exp.kind = EncoderBoundKind::kWasserstein;
  result.wasserstein = EncoderPerturbationExperiment(base, sample, population, exp);
  return result;
}

std::string EncoderBoundToCsv(const EncoderStudyResult& result, const nlohmann::json& stamp) {
  std::ostringstream out;
  out << StampLines(stamp)
      << "bound,trial,gap,bound_value,encoder_term,delta_mean,delta_var,violated\n";
  for (const EncoderReport* rep : {&result.chi_square, &result.wasserstein}) {
    for (std::size_t i = 0; i < rep->trials.size(); ++i) {
      const EncoderTrial& t = rep->trials[i];
      out << rep->theorem << ',' << i << ',' << Num(t.gap) << ',' << Num(t.bound) << ','
          << Num(t.encoder_term) << ',' << Num(t.delta_mean) << ',' << Num(t.delta_var) << ','
          << (t.violated ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

nlohmann::json LecamStudyConfig::ToJson() const {
  return {{"experiment", "lecam"}, {"l_bound", l_bound}, {"m_param", m_param},
          {"ns", ns},              {"trials", trials},   {"radius", radius},
          {"seed", seed},          {"rng", kRngName}};
}

std::vector<LecamStudyRow> RunLecam(const LecamStudyConfig& cfg) {
  std::vector<LecamStudyRow> rows;
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    LecamStudyRow row;
    row.n = cfg.ns[i];
    row.report = LecamProbe(cfg.l_bound, row.n, cfg.m_param, cfg.trials, MixSeed(cfg.seed, i),
                            cfg.radius);
    rows.push_back(row);
  }
  return rows;
}

std::string LecamToCsv(const std::vector<LecamStudyRow>& rows, const nlohmann::json& stamp) {
  std::ostringstream out;
  out << StampLines(stamp) << "n,delta,error_first,error_second,sup_error,lower_bound,passed\n";
  for (const LecamStudyRow& r : rows) {
    out << r.n << ',' << Num(r.report.delta) << ',' << Num(r.report.error_first) << ','
        << Num(r.report.error_second) << ',' << Num(r.report.sup_error) << ','
        << Num(r.report.bound.value) << ',' << (r.report.passed ? 1 : 0) << '\n';
  }
  return out.str();
}

std::string RenderMarkdown(const std::string& csv_text) {
  std::string body;
  std::istringstream in(csv_text);
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line[0] == '#') continue;
    body += line;
    body += '\n';
  }
  const std::vector<std::vector<std::string>> table = ParseCsv(body);
  if (table.empty()) return "";
  auto emit = [](const std::vector<std::string>& cells) {
    std::string s = "|";
    for (const std::string& c : cells) {
      std::string escaped;
      for (char ch : c) {
        if (ch == '|') escaped += '\\';
        escaped += ch;
      }
      s += " " + escaped + " |";
    }
    return s + "\n";
  };
  std::string md = emit(table[0]);
  md += "|";
  for (std::size_t i = 0; i < table[0].size(); ++i) md += " --- |";
  md += "\n";
  for (std::size_t r = 1; r < table.size(); ++r) md += emit(table[r]);
  return md;
}

}  // namespace modro
