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

// Command-line front end for simulation, training, certificates and the
// experiment pipelines.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "modro/ambiguity.h"
#include "modro/bench.h"
#include "modro/certificates.h"
#include "modro/data.h"
#include "modro/dro.h"
#include "modro/error.h"
#include "modro/experiments.h"
#include "modro/models.h"
#include "modro/rng.h"
#include "modro/synthetic.h"

namespace {

using modro::ConfigField;

constexpr int kExitFailedCheck = 1;
constexpr int kExitError = 2;

struct Globals {
  std::size_t threads = 1;
  std::string config_path;
};

// Loads --config (if any) and applies it on top of the parsed flags.
void ApplyConfigFile(const Globals& g, const std::vector<ConfigField>& fields) {
  if (g.config_path.empty()) return;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(modro::ReadTextFile(g.config_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw modro::Error(modro::ErrorKind::kParse,
                       "config " + g.config_path + ": " + std::string(e.what()));
  }
  modro::ApplyConfig(doc, fields);
}

void WriteOut(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    modro::WriteTextFile(path, text);
  }
}

std::vector<std::uint64_t> ResolveSeeds(std::size_t count, std::uint64_t base) {
  std::vector<std::uint64_t> seeds = modro::SeedRange(count);
  for (std::uint64_t& s : seeds) s += base;
  return seeds;
}

// ---- simulate ----

struct SimulateArgs {
  modro::SimConfig sim;
  std::string out;
  std::string manifest_out;
};

void AddSimulate(CLI::App& app, SimulateArgs& a) {
  CLI::App* cmd = app.add_subcommand("simulate", "Generate the multimodal simulation dataset");
  cmd->add_option("--n", a.sim.n, "Number of samples")->capture_default_str();
  cmd->add_option("--shift", a.sim.shift, "Mean shift of the primary modality")
      ->capture_default_str();
  cmd->add_option("--w", a.sim.w, "Mixing weight on the primary modality")
      ->capture_default_str();
  cmd->add_option("--sigma-eps", a.sim.sigma_eps, "Noise SD of derived modalities")
      ->capture_default_str();
  cmd->add_option("--seed", a.sim.seed, "Seed")->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV")->required();
  cmd->add_option("--manifest-out", a.manifest_out, "Output manifest JSON")->required();
}

int RunSimulate(const Globals& g, SimulateArgs& a) {
  ApplyConfigFile(g, {{"n", &a.sim.n},
                      {"shift", &a.sim.shift},
                      {"w", &a.sim.w},
                      {"sigma_eps", &a.sim.sigma_eps},
                      {"seed", &a.sim.seed},
                      {"out", &a.out},
                      {"manifest_out", &a.manifest_out}});
  const modro::MultimodalDataset ds = modro::GenSimulation(a.sim);
  modro::WriteDataset(ds, a.out);
  modro::WriteManifest(modro::ManifestFor(ds), a.manifest_out);
  std::fprintf(stderr, "wrote %zu rows to %s\n", ds.num_samples(), a.out.c_str());
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string data;
  std::string manifest;
  std::string objective = "erm";
  double rho = 0.5;
  bool radius_is_total = false;
  std::string fusion = "late";
  std::string model = "mlp";
  std::size_t hidden = 64;
  std::string optimizer = "adam";
  int epochs = 100;
  std::size_t batch = 128;
  double lr = 0.005;
  std::uint64_t seed = 0;
  std::string model_out;
  std::string trace_out;
};

void AddTrain(CLI::App& app, TrainArgs& a) {
  CLI::App* cmd = app.add_subcommand("train", "Train an ERM or chi-square DRO fusion model");
  cmd->add_option("--data", a.data, "Dataset CSV")->required();
  cmd->add_option("--manifest", a.manifest, "Dataset manifest JSON")->required();
  cmd->add_option("--objective", a.objective, "erm or dro")
      ->check(CLI::IsMember({"erm", "dro"}))
      ->capture_default_str();
  cmd->add_option("--rho", a.rho, "Per-modality budget (or total radius)")
      ->capture_default_str();
  cmd->add_flag("--radius-is-total", a.radius_is_total, "Treat --rho as the total radius B");
  cmd->add_option("--fusion", a.fusion, "late or early")
      ->check(CLI::IsMember({"late", "early"}))
      ->capture_default_str();
  cmd->add_option("--model", a.model, "mlp or linear")
      ->check(CLI::IsMember({"mlp", "linear"}))
      ->capture_default_str();
  cmd->add_option("--hidden", a.hidden, "Hidden width for MLPs")->capture_default_str();
  cmd->add_option("--optimizer", a.optimizer, "adam or sgd")
      ->check(CLI::IsMember({"adam", "sgd"}))
      ->capture_default_str();
  cmd->add_option("--epochs", a.epochs, "Epochs")->capture_default_str();
  cmd->add_option("--batch", a.batch, "Batch size")->capture_default_str();
  cmd->add_option("--lr", a.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
  cmd->add_option("--model-out", a.model_out, "Output model JSON")->required();
  cmd->add_option("--trace-out", a.trace_out, "Output per-epoch objective CSV");
}

modro::FusionModel MakeInit(const TrainArgs& a, const modro::MultimodalDataset& ds) {
  const std::uint64_t seed = modro::MixSeed(a.seed, 3);
  if (a.fusion == "late") {
    return a.model == "mlp" ? modro::FusionModel(modro::MakeLateFusionMlp(ds, a.hidden, seed))
                            : modro::FusionModel(modro::MakeLateFusionLinear(ds, seed));
  }
  return a.model == "mlp" ? modro::FusionModel(modro::MakeEarlyFusionMlp(ds, a.hidden, seed))
                          : modro::FusionModel(modro::MakeEarlyFusionLinear(ds, seed));
}

int RunTrain(const Globals& g, TrainArgs& a) {
  ApplyConfigFile(g, {{"data", &a.data},
                      {"manifest", &a.manifest},
                      {"objective", &a.objective},
                      {"rho", &a.rho},
                      {"radius_is_total", &a.radius_is_total},
                      {"fusion", &a.fusion},
                      {"model", &a.model},
                      {"hidden", &a.hidden},
                      {"optimizer", &a.optimizer},
                      {"epochs", &a.epochs},
                      {"batch", &a.batch},
                      {"lr", &a.lr},
                      {"seed", &a.seed},
                      {"model_out", &a.model_out},
                      {"trace_out", &a.trace_out}});
  const modro::MultimodalDataset ds = modro::LoadDataset(modro::ReadManifest(a.manifest), a.data);
  modro::OptConfig opt;
  opt.optimizer = a.optimizer == "adam" ? modro::OptimizerKind::kAdam : modro::OptimizerKind::kSgd;
  opt.learning_rate = a.lr;
  opt.epochs = a.epochs;
  opt.batch_size = a.batch;
  opt.seed = modro::MixSeed(a.seed, 4);
  const modro::FusionModel init = MakeInit(a, ds);

  modro::Objective objective = modro::Objective::Erm();
  if (a.objective == "dro") {
    double radius = a.rho;
    if (!a.radius_is_total) {
      // Correlations come from the embeddings of an ERM fit (late fusion) or
      // of per-modality OLS encoders (early fusion, which has no encoders).
      Eigen::MatrixXd embeddings;
      if (a.fusion == "late") {
        const modro::TrainResult erm = modro::Train(init, ds, modro::Objective::Erm(), opt);
        embeddings = modro::Encode(std::get<modro::LateFusionModel>(erm.model), ds);
      } else {
        embeddings = modro::Encode(modro::FitLateFusionOls(ds), ds);
      }
      const Eigen::MatrixXd gamma = modro::EstimateGamma(embeddings, ds.modality_names());
      radius = modro::ComputeRadius(modro::AmbiguitySpec::Uniform(a.rho, gamma)).value;
    }
    std::fprintf(stderr, "chi-square radius B = %.6g\n", radius);
    objective = modro::Objective::Chi2Dro(radius);
  }
  const modro::TrainResult result = modro::Train(init, ds, objective, opt);
  modro::WriteTextFile(a.model_out, modro::ModelToJson(result.model));
  if (!a.trace_out.empty()) {
    std::string csv = "epoch,objective\n";
    for (std::size_t e = 0; e < result.trace.size(); ++e) {
      csv += std::to_string(e + 1) + "," + modro::FormatDouble(result.trace[e]) + "\n";
    }
    modro::WriteTextFile(a.trace_out, csv);
  }
  std::fprintf(stderr, "final objective %.6g\n", result.trace.empty() ? 0.0 : result.trace.back());
  return 0;
}

// ---- certify ----

struct CertifyArgs {
  std::string theorem = "1";
  std::string json;
  std::string out;
};

void AddCertify(CLI::App& app, CertifyArgs& a) {
  CLI::App* cmd = app.add_subcommand("certify", "Evaluate a certificate from JSON inputs");
  cmd->add_option("--theorem", a.theorem,
                  "1 (generalization), 2 (encoder-robust), 3 (minimax lower), w-encoder")
      ->check(CLI::IsMember({"1", "2", "3", "w-encoder"}))
      ->required();
  cmd->add_option("--json", a.json, "Input JSON")->required();
  cmd->add_option("--out", a.out, "Report JSON (stdout if omitted)");
}

int RunCertify(const Globals& g, CertifyArgs& a) {
  ApplyConfigFile(g, {{"theorem", &a.theorem}, {"json", &a.json}, {"out", &a.out}});
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(modro::ReadTextFile(a.json));
  } catch (const nlohmann::json::parse_error& e) {
    throw modro::Error(modro::ErrorKind::kParse, a.json + ": " + std::string(e.what()));
  }
  modro::BoundReport report;
  if (a.theorem == "3") {
    double l_bound = 1.0, m_param = 0.0;
    std::size_t n = 1;
    modro::ApplyConfig(doc, {{"l_bound", &l_bound}, {"n", &n}, {"m_param", &m_param}});
    report = modro::MinimaxLower(l_bound, n, m_param);
  } else {
    const modro::BoundInputs in = modro::BoundInputs::FromJson(doc);
    report = a.theorem == "1"   ? modro::GeneralizationUpper(in)
             : a.theorem == "2" ? modro::EncoderRobustUpper(in)
                                : modro::WEncoderUpper(in);
  }
  WriteOut(a.out, report.ToJson().dump(2) + "\n");
  return 0;
}

// ---- chi2-study ----

struct Chi2Args {
  std::string correlations = "-0.6,-0.3,0,0.3,0.6";
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  double z_scale = 0.5;
  std::string out;
};

void AddChi2(CLI::App& app, Chi2Args& a) {
  CLI::App* cmd = app.add_subcommand("chi2-study", "Chi-square divergence versus correlation");
  cmd->add_option("--correlations", a.correlations, "Comma-separated correlations")
      ->capture_default_str();
  cmd->add_option("--trials", a.trials, "Trials per correlation")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
  cmd->add_option("--z-scale", a.z_scale, "SD of the standardized mean shift")
      ->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV (stdout if omitted)");
}

int RunChi2(const Globals& g, Chi2Args& a) {
  std::vector<double> correlations = modro::ParseDoubleList(a.correlations);
  ApplyConfigFile(g, {{"correlations", &correlations},
                      {"trials", &a.trials},
                      {"seed", &a.seed},
                      {"z_scale", &a.z_scale},
                      {"out", &a.out}});
  const auto rows = modro::RunChi2Study(correlations, a.trials, a.seed, a.z_scale);
  const nlohmann::json stamp = {{"experiment", "chi2-study"}, {"correlations", correlations},
                                {"trials", a.trials},         {"seed", a.seed},
                                {"z_scale", a.z_scale},       {"rng", modro::kRngName}};
  WriteOut(a.out, modro::Chi2StudyToCsv(rows, stamp));
  return 0;
}

// ---- table1 ----

struct Table1Args {
  modro::Table1Config cfg;
  std::string rhos = "0.1,0.5,1.2,2.0";
  std::size_t seeds = 30;
  std::uint64_t seed_base = 0;
  std::string out_dir = "table1_out";
};

void AddTable1(CLI::App& app, Table1Args& a) {
  CLI::App* cmd = app.add_subcommand("table1", "ERM vs chi-square DRO under distribution shift");
  cmd->add_option("--rhos", a.rhos, "Comma-separated radii")->capture_default_str();
  cmd->add_option("--seeds", a.seeds, "Number of seeds")->capture_default_str();
  cmd->add_option("--seed-base", a.seed_base, "First seed")->capture_default_str();
  cmd->add_option("--out-dir", a.out_dir, "Output directory")->capture_default_str();
  cmd->add_option("--n-train", a.cfg.n_train, "Training samples")->capture_default_str();
  cmd->add_option("--n-test", a.cfg.n_test, "Test samples")->capture_default_str();
  cmd->add_option("--hidden", a.cfg.hidden, "Encoder hidden width")->capture_default_str();
  cmd->add_option("--epochs", a.cfg.epochs, "Epochs")->capture_default_str();
  cmd->add_option("--batch", a.cfg.batch_size, "Batch size")->capture_default_str();
  cmd->add_option("--lr", a.cfg.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--shift", a.cfg.test_shift, "Test-time mean shift")->capture_default_str();
  cmd->add_flag("--radius-is-total", a.cfg.radius_is_total, "Treat rho as the total radius B");
}

int RunTable1Cmd(const Globals& g, Table1Args& a) {
  a.cfg.rhos = modro::ParseDoubleList(a.rhos);
  a.cfg.seeds = ResolveSeeds(a.seeds, a.seed_base);
  ApplyConfigFile(g, {{"rhos", &a.cfg.rhos},
                      {"seeds", &a.cfg.seeds},
                      {"out_dir", &a.out_dir},
                      {"n_train", &a.cfg.n_train},
                      {"n_test", &a.cfg.n_test},
                      {"hidden", &a.cfg.hidden},
                      {"epochs", &a.cfg.epochs},
                      {"batch", &a.cfg.batch_size},
                      {"lr", &a.cfg.learning_rate},
                      {"shift", &a.cfg.test_shift},
                      {"radius_is_total", &a.cfg.radius_is_total}});
  a.cfg.threads = g.threads;
  const modro::Table1Result result = modro::RunTable1(a.cfg);
  const std::filesystem::path dir(a.out_dir);
  modro::WriteTextFile(dir / "table1.csv", modro::Table1ToCsv(result));
  modro::WriteTextFile(dir / "table1_cells.csv", modro::Table1CellsToCsv(result));
  std::cout << modro::RenderMarkdown(modro::Table1ToCsv(result));
  bool ordered = true;
  for (const modro::Table1Row& r : result.rows) {
    ordered = ordered && r.whole_dro.mean < r.whole_erm.mean && r.minor_dro.mean < r.minor_erm.mean;
  }
  std::fprintf(stderr, "DRO below ERM on every row: %s\n", ordered ? "yes" : "no");
  return ordered ? 0 : kExitFailedCheck;
}

// ---- coverage / encoder-bound / lecam ----

struct CoverageArgs {
  modro::CoverageStudyConfig cfg;
  std::string out_dir = "coverage_out";
};

void AddCoverage(CLI::App& app, CoverageArgs& a) {
  CLI::App* cmd = app.add_subcommand("coverage", "Empirical coverage of the generalization bound");
  cmd->add_option("--trials", a.cfg.trials, "Resamples per (n, t)")->capture_default_str();
  cmd->add_option("--p", a.cfg.p, "Probability of the high loss")->capture_default_str();
  cmd->add_option("--radius", a.cfg.radius, "Radius B")->capture_default_str();
  cmd->add_option("--c-const", a.cfg.c_const, "Absolute constant C")->capture_default_str();
  cmd->add_option("--seed", a.cfg.seed, "Seed")->capture_default_str();
  cmd->add_option("--out-dir", a.out_dir, "Output directory")->capture_default_str();
}

int RunCoverageCmd(const Globals& g, CoverageArgs& a) {
  ApplyConfigFile(g, {{"ns", &a.cfg.ns},
                      {"ts", &a.cfg.ts},
                      {"trials", &a.cfg.trials},
                      {"p", &a.cfg.p},
                      {"loss_high", &a.cfg.loss_high},
                      {"radius", &a.cfg.radius},
                      {"c_const", &a.cfg.c_const},
                      {"seed", &a.cfg.seed},
                      {"out_dir", &a.out_dir}});
  const auto rows = modro::RunCoverage(a.cfg);
  const std::filesystem::path dir(a.out_dir);
  modro::WriteTextFile(dir / "coverage.csv", modro::CoverageToCsv(rows, a.cfg.ToJson()));
  nlohmann::json reports = nlohmann::json::array();
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && r.report.passed;
    reports.push_back({{"n", r.n},
                       {"t", r.t},
                       {"frequency", r.report.frequency},
                       {"tolerance", r.report.tolerance},
                       {"bound", r.report.bound.ToJson()},
                       {"passed", r.report.passed}});
  }
  modro::WriteTextFile(dir / "coverage.json",
                       nlohmann::json{{"config", a.cfg.ToJson()}, {"reports", reports}}.dump(2));
  std::cout << modro::RenderMarkdown(modro::CoverageToCsv(rows, a.cfg.ToJson()));
  return ok ? 0 : kExitFailedCheck;
}

struct EncoderArgs {
  modro::EncoderStudyConfig cfg;
  std::string out_dir = "encoder_out";
};

void AddEncoder(CLI::App& app, EncoderArgs& a) {
  CLI::App* cmd =
      app.add_subcommand("encoder-bound", "Encoder perturbation checks of the robust bounds");
  cmd->add_option("--trials", a.cfg.trials, "Perturbation trials")->capture_default_str();
  cmd->add_option("--scale", a.cfg.scale, "Perturbation scale")->capture_default_str();
  cmd->add_option("--modality", a.cfg.modality, "Perturbed modality index")
      ->capture_default_str();
  cmd->add_option("--radius", a.cfg.radius, "Radius B")->capture_default_str();
  cmd->add_option("--t", a.cfg.t, "Confidence exponent")->capture_default_str();
  cmd->add_option("--seed", a.cfg.seed, "Seed")->capture_default_str();
  cmd->add_option("--out-dir", a.out_dir, "Output directory")->capture_default_str();
}

int RunEncoderCmd(const Globals& g, EncoderArgs& a) {
  ApplyConfigFile(g, {{"n_fit", &a.cfg.n_fit},
                      {"n_sample", &a.cfg.n_sample},
                      {"n_population", &a.cfg.n_population},
                      {"modality", &a.cfg.modality},
                      {"scale", &a.cfg.scale},
                      {"radius", &a.cfg.radius},
                      {"t", &a.cfg.t},
                      {"trials", &a.cfg.trials},
                      {"seed", &a.cfg.seed},
                      {"out_dir", &a.out_dir}});
  const modro::EncoderStudyResult result = modro::RunEncoderBound(a.cfg);
  const std::filesystem::path dir(a.out_dir);
  const std::string csv = modro::EncoderBoundToCsv(result, a.cfg.ToJson());
  modro::WriteTextFile(dir / "encoder_bound.csv", csv);
  const nlohmann::json summary = {
      {"config", a.cfg.ToJson()},
      {"chi_square", {{"violations", result.chi_square.violations},
                      {"passed", result.chi_square.passed}}},
      {"wasserstein", {{"violations", result.wasserstein.violations},
                       {"passed", result.wasserstein.passed}}}};
  modro::WriteTextFile(dir / "encoder_bound.json", summary.dump(2));
  std::printf("chi-square violations %zu/%zu, wasserstein violations %zu/%zu\n",
              result.chi_square.violations, result.chi_square.trials.size(),
              result.wasserstein.violations, result.wasserstein.trials.size());
  return result.chi_square.passed && result.wasserstein.passed ? 0 : kExitFailedCheck;
}

struct LecamArgs {
  modro::LecamStudyConfig cfg;
  std::string out_dir = "lecam_out";
};

void AddLecam(CLI::App& app, LecamArgs& a) {
  CLI::App* cmd = app.add_subcommand("lecam", "Two-point probe of the minimax lower bound");
  cmd->add_option("--l", a.cfg.l_bound, "Loss level L")->capture_default_str();
  cmd->add_option("--m", a.cfg.m_param, "Packing parameter M (> 2)")->capture_default_str();
  cmd->add_option("--trials", a.cfg.trials, "Trials per distribution")->capture_default_str();
  cmd->add_option("--radius", a.cfg.radius, "Radius B")->capture_default_str();
  cmd->add_option("--seed", a.cfg.seed, "Seed")->capture_default_str();
  cmd->add_option("--out-dir", a.out_dir, "Output directory")->capture_default_str();
}

int RunLecamCmd(const Globals& g, LecamArgs& a) {
  ApplyConfigFile(g, {{"l", &a.cfg.l_bound},
                      {"m", &a.cfg.m_param},
                      {"ns", &a.cfg.ns},
                      {"trials", &a.cfg.trials},
                      {"radius", &a.cfg.radius},
                      {"seed", &a.cfg.seed},
                      {"out_dir", &a.out_dir}});
  const auto rows = modro::RunLecam(a.cfg);
  const std::filesystem::path dir(a.out_dir);
  const std::string csv = modro::LecamToCsv(rows, a.cfg.ToJson());
  modro::WriteTextFile(dir / "lecam.csv", csv);
  nlohmann::json reports = nlohmann::json::array();
  bool ok = true;
  for (const auto& r : rows) {
    ok = ok && r.report.passed;
    reports.push_back({{"n", r.n},
                       {"sup_error", r.report.sup_error},
                       {"bound", r.report.bound.ToJson()},
                       {"passed", r.report.passed}});
  }
  modro::WriteTextFile(dir / "lecam.json",
                       nlohmann::json{{"config", a.cfg.ToJson()}, {"reports", reports}}.dump(2));
  std::cout << modro::RenderMarkdown(csv);
  return ok ? 0 : kExitFailedCheck;
}

// ---- bench ----

struct BenchArgs {
  std::string mode = "ols";
  std::string grid;
  bool parallel = false;
  int reps = 5;
  int warmup = 1;
  std::uint64_t seed = 0;
  std::string out;
};

void AddBench(CLI::App& app, BenchArgs& a) {
  CLI::App* cmd = app.add_subcommand("bench", "Time early vs late fusion OLS and SGD epochs");
  cmd->add_option("--mode", a.mode, "ols or sgd")
      ->check(CLI::IsMember({"ols", "sgd"}))
      ->capture_default_str();
  cmd->add_option("--grid", a.grid,
                  "Inline JSON [{\"n\":..,\"k\":..,\"d\":..}] or a file holding it")
      ->required();
  cmd->add_flag("--parallel", a.parallel, "Also time the parallel late fusion path");
  cmd->add_option("--reps", a.reps, "Timed repetitions")->capture_default_str();
  cmd->add_option("--warmup", a.warmup, "Warmup runs")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
  cmd->add_option("--out", a.out, "Output CSV (stdout if omitted)");
}

int RunBenchCmd(const Globals& g, BenchArgs& a) {
  ApplyConfigFile(g, {{"mode", &a.mode},
                      {"grid", &a.grid},
                      {"parallel", &a.parallel},
                      {"reps", &a.reps},
                      {"warmup", &a.warmup},
                      {"seed", &a.seed},
                      {"out", &a.out}});
  modro::BenchConfig cfg;
  nlohmann::json grid_doc;
  try {
    const auto first = a.grid.find_first_not_of(" \t");
    const bool inline_json = first != std::string::npos && a.grid[first] == '[';
    grid_doc = nlohmann::json::parse(inline_json ? a.grid : modro::ReadTextFile(a.grid));
  } catch (const nlohmann::json::parse_error& e) {
    throw modro::Error(modro::ErrorKind::kParse, a.grid + ": " + std::string(e.what()));
  }
  cfg.grid = modro::BenchGridFromJson(grid_doc);
  cfg.parallel = a.parallel;
  cfg.repetitions = a.reps;
  cfg.warmup = a.warmup;
  cfg.seed = a.seed;
  cfg.threads = g.threads;
  const auto rows = a.mode == "ols" ? modro::BenchOls(cfg) : modro::BenchSgdEpoch(cfg);
  WriteOut(a.out, modro::BenchRowsToCsv(rows));
  return 0;
}

// ---- render ----

struct RenderArgs {
  std::string csv;
  std::string out;
};

void AddRender(CLI::App& app, RenderArgs& a) {
  CLI::App* cmd = app.add_subcommand("render", "Render a result CSV as a markdown table");
  cmd->add_option("csv", a.csv, "Result CSV")->required();
  cmd->add_option("--out", a.out, "Output markdown (stdout if omitted)");
}

int RunRender(const Globals& g, RenderArgs& a) {
  ApplyConfigFile(g, {{"csv", &a.csv}, {"out", &a.out}});
  WriteOut(a.out, modro::RenderMarkdown(modro::ReadTextFile(a.csv)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"modro: multimodal distributionally robust learning toolkit"};
  app.require_subcommand(1);
  Globals g;
  g.threads = std::max(1u, std::thread::hardware_concurrency());
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--config", g.config_path, "JSON overrides for the subcommand's options");

  SimulateArgs simulate;
  TrainArgs train;
  CertifyArgs certify;
  Chi2Args chi2;
  Table1Args table1;
  CoverageArgs coverage;
  EncoderArgs encoder;
  LecamArgs lecam;
  BenchArgs bench;
  RenderArgs render;
  AddSimulate(app, simulate);
  AddTrain(app, train);
  AddCertify(app, certify);
  AddChi2(app, chi2);
  AddTable1(app, table1);
  AddCoverage(app, coverage);
  AddEncoder(app, encoder);
  AddLecam(app, lecam);
  AddBench(app, bench);
  AddRender(app, render);

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string name = app.get_subcommands().front()->get_name();
    if (name == "simulate") return RunSimulate(g, simulate);
    if (name == "train") return RunTrain(g, train);
    if (name == "certify") return RunCertify(g, certify);
    if (name == "chi2-study") return RunChi2(g, chi2);
    if (name == "table1") return RunTable1Cmd(g, table1);
    if (name == "coverage") return RunCoverageCmd(g, coverage);
    if (name == "encoder-bound") return RunEncoderCmd(g, encoder);
    if (name == "lecam") return RunLecamCmd(g, lecam);
    if (name == "bench") return RunBenchCmd(g, bench);
    if (name == "render") return RunRender(g, render);
  } catch (const modro::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", modro::ErrorKindName(e.kind()), e.what());
    return kExitError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitError;
  }
  return kExitError;
}
