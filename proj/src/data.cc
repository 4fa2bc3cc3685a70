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

#include "modro/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "modro/error.h"
#include "modro/rng.h"

namespace modro {
namespace {

std::string RowColumnContext(std::size_t row, const std::string& column) {
  return "row " + std::to_string(row) + ", column '" + column + "'";
}

}  // namespace

MultimodalDataset::MultimodalDataset(std::vector<RowMatrix> blocks, Eigen::VectorXd targets,
                                     std::vector<std::string> modality_names,
                                     std::vector<std::vector<std::string>> feature_names,
                                     std::string target_name)
    : blocks_(std::move(blocks)),
      targets_(std::move(targets)),
      modality_names_(std::move(modality_names)),
      feature_names_(std::move(feature_names)),
      target_name_(std::move(target_name)) {
  if (blocks_.empty()) {
    throw Error(ErrorKind::kStructure, "dataset needs at least one modality block");
  }
  if (targets_.size() < 1) {
    throw Error(ErrorKind::kStructure, "dataset needs at least one sample");
  }
  const auto n = targets_.size();
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (blocks_[k].rows() != n) {
      throw Error(ErrorKind::kStructure,
                  "block " + std::to_string(k) + " has " + std::to_string(blocks_[k].rows()) +
                      " rows but there are " + std::to_string(n) + " targets");
    }
    if (blocks_[k].cols() < 1) {
      throw Error(ErrorKind::kStructure, "block " + std::to_string(k) + " has no columns");
    }
    if (!blocks_[k].allFinite()) {
      throw Error(ErrorKind::kValidation, "block " + std::to_string(k) + " has non-finite values");
    }
  }
  if (!targets_.allFinite()) {
    throw Error(ErrorKind::kValidation, "targets contain non-finite values");
  }
  if (modality_names_.empty()) {
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      modality_names_.push_back("m" + std::to_string(k + 1));
    }
  }
  if (modality_names_.size() != blocks_.size()) {
    throw Error(ErrorKind::kStructure, "modality name count does not match block count");
  }
  if (feature_names_.empty()) {
    for (std::size_t k = 0; k < blocks_.size(); ++k) {
      std::vector<std::string> names;
      for (Eigen::Index j = 0; j < blocks_[k].cols(); ++j) {
        names.push_back(modality_names_[k] + "_" + std::to_string(j));
      }
      feature_names_.push_back(std::move(names));
    }
  }
  if (feature_names_.size() != blocks_.size()) {
    throw Error(ErrorKind::kStructure, "feature name lists do not match block count");
  }
  for (std::size_t k = 0; k < blocks_.size(); ++k) {
    if (feature_names_[k].size() != static_cast<std::size_t>(blocks_[k].cols())) {
      throw Error(ErrorKind::kStructure,
                  "feature names for block " + std::to_string(k) + " do not match its width");
    }
  }
}

std::size_t MultimodalDataset::total_dim() const {
  std::size_t d = 0;
  for (const auto& b : blocks_) d += static_cast<std::size_t>(b.cols());
  return d;
}

RowMatrix MultimodalDataset::Concatenated() const {
  RowMatrix out(targets_.size(), static_cast<Eigen::Index>(total_dim()));
  Eigen::Index col = 0;
  for (const auto& b : blocks_) {
    out.middleCols(col, b.cols()) = b;
    col += b.cols();
  }
  return out;
}

bool operator==(const MultimodalDataset& a, const MultimodalDataset& b) {
  if (a.blocks_.size() != b.blocks_.size()) return false;
  for (std::size_t k = 0; k < a.blocks_.size(); ++k) {
    if (a.blocks_[k].rows() != b.blocks_[k].rows() || a.blocks_[k].cols() != b.blocks_[k].cols()) {
      return false;
    }
    if (a.blocks_[k] != b.blocks_[k]) return false;
  }
  return a.targets_.size() == b.targets_.size() && a.targets_ == b.targets_ &&
         a.modality_names_ == b.modality_names_ && a.feature_names_ == b.feature_names_ &&
         a.target_name_ == b.target_name_;
}

void DatasetManifest::Validate() const {
  if (modalities.empty()) {
    throw Error(ErrorKind::kSchema, "manifest lists no modalities");
  }
  if (target.empty()) {
    throw Error(ErrorKind::kSchema, "manifest has an empty target column");
  }
  std::set<std::string> seen;
  std::set<std::string> names;
  for (const auto& m : modalities) {
    if (m.columns.empty()) {
      throw Error(ErrorKind::kSchema, "modality '" + m.name + "' has no columns");
    }
    if (!names.insert(m.name).second) {
      throw Error(ErrorKind::kSchema, "duplicate modality name '" + m.name + "'");
    }
    for (const auto& c : m.columns) {
      if (c == target) {
        throw Error(ErrorKind::kSchema, "target column '" + c + "' is assigned to modality '" +
                                            m.name + "'");
      }
      if (!seen.insert(c).second) {
        throw Error(ErrorKind::kSchema, "column '" + c + "' is assigned to more than one modality");
      }
    }
  }
}

DatasetManifest ManifestFromJson(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::kSchema, "manifest: expected a JSON object");
  if (!doc.contains("modalities") || !doc["modalities"].is_array()) {
    throw Error(ErrorKind::kSchema, "manifest.modalities: expected an array");
  }
  if (!doc.contains("target") || !doc["target"].is_string()) {
    throw Error(ErrorKind::kSchema, "manifest.target: expected a string");
  }
  DatasetManifest manifest;
  manifest.target = doc["target"].get<std::string>();
  const auto& mods = doc["modalities"];
  for (std::size_t i = 0; i < mods.size(); ++i) {
    const std::string where = "manifest.modalities[" + std::to_string(i) + "]";
    const auto& m = mods[i];
    if (!m.is_object() || !m.contains("name") || !m["name"].is_string()) {
      throw Error(ErrorKind::kSchema, where + ".name: expected a string");
    }
    if (!m.contains("columns") || !m["columns"].is_array()) {
      throw Error(ErrorKind::kSchema, where + ".columns: expected an array");
    }
    ModalitySpec spec;
    spec.name = m["name"].get<std::string>();
    for (std::size_t j = 0; j < m["columns"].size(); ++j) {
      const auto& c = m["columns"][j];
      if (!c.is_string()) {
        throw Error(ErrorKind::kSchema,
                    where + ".columns[" + std::to_string(j) + "]: expected a string");
      }
      spec.columns.push_back(c.get<std::string>());
    }
    manifest.modalities.push_back(std::move(spec));
  }
  manifest.Validate();
  return manifest;
}

std::string ManifestToJson(const DatasetManifest& manifest) {
  nlohmann::json doc;
  doc["modalities"] = nlohmann::json::array();
  for (const auto& m : manifest.modalities) {
    doc["modalities"].push_back({{"name", m.name}, {"columns", m.columns}});
  }
  doc["target"] = manifest.target;
  return doc.dump(2) + "\n";
}

DatasetManifest ReadManifest(const std::filesystem::path& path) {
  return ManifestFromJson(ReadTextFile(path));
}

void WriteManifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  WriteTextFile(path, ManifestToJson(manifest));
}

DatasetManifest ManifestFor(const MultimodalDataset& ds) {
  DatasetManifest manifest;
  for (std::size_t k = 0; k < ds.num_modalities(); ++k) {
    manifest.modalities.push_back({ds.modality_names()[k], ds.feature_names()[k]});
  }
  manifest.target = ds.target_name();
  return manifest;
}

std::vector<std::vector<std::string>> ParseCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  std::size_t line = 1;
  auto end_row = [&]() {
    row.push_back(std::move(field));
    field.clear();
    rows.push_back(std::move(row));
    row.clear();
    field_started = false;
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty()) {
          throw Error(ErrorKind::kParse,
                      "stray quote inside unquoted field on line " + std::to_string(line));
        }
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        field_started = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;
        end_row();
        ++line;
        break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        field.push_back(ch);
        field_started = true;
    }
  }
  if (in_quotes) {
    throw Error(ErrorKind::kParse, "unterminated quoted field at end of input");
  }
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string CsvEscape(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string FormatDouble(double value, int significant_digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", significant_digits, value);
  return buf;
}

MultimodalDataset ParseDataset(const DatasetManifest& manifest, const std::string& csv_text) {
  manifest.Validate();
  const auto rows = ParseCsv(csv_text);
  if (rows.empty()) throw Error(ErrorKind::kStructure, "CSV has no header row");
  const auto& header = rows.front();
  std::map<std::string, std::size_t> column_index;
  for (std::size_t j = 0; j < header.size(); ++j) column_index.emplace(header[j], j);

  auto locate = [&](const std::string& name) {
    auto it = column_index.find(name);
    if (it == column_index.end()) {
      throw Error(ErrorKind::kMissingColumn, "column '" + name + "' not found in CSV header");
    }
    return it->second;
  };
  std::vector<std::vector<std::size_t>> block_cols;
  for (const auto& m : manifest.modalities) {
    std::vector<std::size_t> cols;
    for (const auto& c : m.columns) cols.push_back(locate(c));
    block_cols.push_back(std::move(cols));
  }
  const std::size_t target_col = locate(manifest.target);

  const std::size_t n = rows.size() - 1;
  if (n == 0) throw Error(ErrorKind::kStructure, "CSV has a header but no data rows");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error(ErrorKind::kStructure, "row " + std::to_string(r) + " has " +
                                             std::to_string(rows[r].size()) +
                                             " fields, header has " +
                                             std::to_string(header.size()));
    }
  }
  auto cell = [&](std::size_t r, std::size_t c) {
    const std::string& text = rows[r][c];
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(value)) {
      throw Error(ErrorKind::kParse, "cannot parse '" + text + "' as a finite real at " +
                                         RowColumnContext(r, header[c]));
    }
    return value;
  };

  std::vector<RowMatrix> blocks;
  std::vector<std::vector<std::string>> feature_names;
  std::vector<std::string> modality_names;
  for (std::size_t k = 0; k < block_cols.size(); ++k) {
    RowMatrix block(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(block_cols[k].size()));
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < block_cols[k].size(); ++j) {
        block(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
            cell(r + 1, block_cols[k][j]);
      }
    }
    blocks.push_back(std::move(block));
    feature_names.push_back(manifest.modalities[k].columns);
    modality_names.push_back(manifest.modalities[k].name);
  }
  Eigen::VectorXd targets(static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r) targets(static_cast<Eigen::Index>(r)) = cell(r + 1, target_col);
  return MultimodalDataset(std::move(blocks), std::move(targets), std::move(modality_names),
                           std::move(feature_names), manifest.target);
}

MultimodalDataset LoadDataset(const DatasetManifest& manifest,
                              const std::filesystem::path& csv_path) {
  return ParseDataset(manifest, ReadTextFile(csv_path));
}

std::string FormatDataset(const MultimodalDataset& ds) {
  std::ostringstream out;
  bool first = true;
  for (const auto& names : ds.feature_names()) {
    for (const auto& name : names) {
      if (!first) out << ',';
      out << CsvEscape(name);
      first = false;
    }
  }
  out << ',' << CsvEscape(ds.target_name()) << '\n';
  for (std::size_t r = 0; r < ds.num_samples(); ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    for (std::size_t k = 0; k < ds.num_modalities(); ++k) {
      const auto& b = ds.block(k);
      for (Eigen::Index j = 0; j < b.cols(); ++j) {
        if (k != 0 || j != 0) out << ',';
        out << FormatDouble(b(row, j));
      }
    }
    out << ',' << FormatDouble(ds.targets()(row)) << '\n';
  }
  return out.str();
}

void WriteDataset(const MultimodalDataset& ds, const std::filesystem::path& csv_path) {
  WriteTextFile(csv_path, FormatDataset(ds));
}

Split SplitByFraction(const MultimodalDataset& ds, double test_fraction, std::uint64_t seed) {
  const std::size_t n = ds.num_samples();
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::kValidation, "test fraction must lie in (0, 1)");
  }
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  if (n < 2 || n_test == 0 || n_test >= n) {
    throw Error(ErrorKind::kDegenerateSplit,
                "fraction " + FormatDouble(test_fraction, 6) + " of " + std::to_string(n) +
                    " samples leaves one side of the split empty");
  }
  Rng rng(seed);
  auto perm = rng.Permutation(n);
  Split split;
  split.test_indices.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
  split.train_indices.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
  std::sort(split.test_indices.begin(), split.test_indices.end());
  std::sort(split.train_indices.begin(), split.train_indices.end());
  return split;
}

MultimodalDataset SelectRows(const MultimodalDataset& ds, std::span<const std::size_t> indices) {
  const std::size_t n = ds.num_samples();
  for (std::size_t idx : indices) {
    if (idx >= n) {
      throw Error(ErrorKind::kBounds, "row index " + std::to_string(idx) +
                                          " out of range for " + std::to_string(n) + " samples");
    }
  }
  const auto m = static_cast<Eigen::Index>(indices.size());
  std::vector<RowMatrix> blocks;
  for (const auto& b : ds.blocks()) {
    RowMatrix out(m, b.cols());
    for (Eigen::Index r = 0; r < m; ++r) out.row(r) = b.row(static_cast<Eigen::Index>(indices[r]));
    blocks.push_back(std::move(out));
  }
  Eigen::VectorXd targets(m);
  for (Eigen::Index r = 0; r < m; ++r) targets(r) = ds.targets()(static_cast<Eigen::Index>(indices[r]));
  return MultimodalDataset(std::move(blocks), std::move(targets), ds.modality_names(),
                           ds.feature_names(), ds.target_name());
}

std::string ReadTextFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void WriteTextFile(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "failed writing '" + path.string() + "'");
}

}  // namespace modro
