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

#ifndef MODRO_DATA_H_
#define MODRO_DATA_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace modro {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// N samples split into K modality blocks plus a target vector. Immutable
// once constructed; blocks are kept separate and only concatenated on demand.
class MultimodalDataset {
 public:
  // Validates shapes and finiteness; throws Error on violation. Empty name
  // lists get generated defaults ("m1", "m1_0", ...).
  MultimodalDataset(std::vector<RowMatrix> blocks, Eigen::VectorXd targets,
                    std::vector<std::string> modality_names = {},
                    std::vector<std::vector<std::string>> feature_names = {},
                    std::string target_name = "y");

  std::size_t num_samples() const { return static_cast<std::size_t>(targets_.size()); }
  std::size_t num_modalities() const { return blocks_.size(); }
  std::size_t block_dim(std::size_t k) const {
    return static_cast<std::size_t>(blocks_.at(k).cols());
  }
  std::size_t total_dim() const;

  const RowMatrix& block(std::size_t k) const { return blocks_.at(k); }
  const std::vector<RowMatrix>& blocks() const { return blocks_; }
  const Eigen::VectorXd& targets() const { return targets_; }
  const std::vector<std::string>& modality_names() const { return modality_names_; }
  const std::vector<std::vector<std::string>>& feature_names() const {
    return feature_names_;
  }
  const std::string& target_name() const { return target_name_; }

  // N x D early-fusion design, blocks in modality order.
  RowMatrix Concatenated() const;

  friend bool operator==(const MultimodalDataset& a, const MultimodalDataset& b);

 private:
  std::vector<RowMatrix> blocks_;
  Eigen::VectorXd targets_;
  std::vector<std::string> modality_names_;
  std::vector<std::vector<std::string>> feature_names_;
  std::string target_name_;
};

struct ModalitySpec {
  std::string name;
  std::vector<std::string> columns;
};

struct DatasetManifest {
  std::vector<ModalitySpec> modalities;
  std::string target;

  // Disjoint column assignment, target unassigned, no empty modality.
  void Validate() const;
};

struct Split {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

DatasetManifest ManifestFromJson(const std::string& json_text);
std::string ManifestToJson(const DatasetManifest& manifest);
DatasetManifest ReadManifest(const std::filesystem::path& path);
void WriteManifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Manifest describing the dataset's own column layout.
DatasetManifest ManifestFor(const MultimodalDataset& ds);

MultimodalDataset LoadDataset(const DatasetManifest& manifest,
                              const std::filesystem::path& csv_path);
MultimodalDataset ParseDataset(const DatasetManifest& manifest, const std::string& csv_text);

// Header = feature columns in block order then the target; values printed
// with 17 significant digits so a reload is exact.
std::string FormatDataset(const MultimodalDataset& ds);
void WriteDataset(const MultimodalDataset& ds, const std::filesystem::path& csv_path);

Split SplitByFraction(const MultimodalDataset& ds, double test_fraction, std::uint64_t seed);

MultimodalDataset SelectRows(const MultimodalDataset& ds, std::span<const std::size_t> indices);

// RFC-4180 helpers shared with the experiment tables.
std::vector<std::vector<std::string>> ParseCsv(const std::string& text);
std::string CsvEscape(const std::string& field);
std::string FormatDouble(double value, int significant_digits = 17);

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace modro

#endif  // MODRO_DATA_H_
