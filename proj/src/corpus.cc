/*
 * Copyright 2026 The raremine Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "raremine/corpus.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>
#include <utility>

#include <fmt/format.h>

#include "json.hpp"
#include "raremine/log.h"

namespace raremine {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

const json& RequireKey(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(fmt::format("line {}: missing key '{}'", line, key));
  }
  return *it;
}

std::string RequireString(const json& obj, const char* key, std::size_t line) {
  const json& v = RequireKey(obj, key, line);
  if (!v.is_string()) {
    throw Error(fmt::format("line {}: key '{}' must be a string", line, key));
  }
  return v.get<std::string>();
}

double RequireNumber(const json& v, const char* what, std::size_t line) {
  if (!v.is_number()) {
    throw Error(fmt::format("line {}: {} must be a number", line, what));
  }
  return v.get<double>();
}

// Calls fn(line_number, line) for each non-blank line.
template <typename Fn>
void ForEachLine(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) fn(line_no, line);
    pos = end + 1;
  }
}

json ParseLine(std::string_view line, std::size_t line_no) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("line {}: malformed record: {}", line_no, e.what()));
  }
  if (!obj.is_object()) {
    throw Error(fmt::format("line {}: record must be a JSON object", line_no));
  }
  return obj;
}

float LoadLittleEndianFloat(const char* bytes) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, bytes, sizeof(bits));
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) |
           ((bits >> 8) & 0xff00u) | (bits >> 24);
  }
  return std::bit_cast<float>(bits);
}

void StoreLittleEndianFloat(float value, char* out) {
  std::uint32_t bits = std::bit_cast<std::uint32_t>(value);
  if constexpr (std::endian::native == std::endian::big) {
    bits = ((bits & 0xffu) << 24) | ((bits & 0xff00u) << 8) |
           ((bits >> 8) & 0xff00u) | (bits >> 24);
  }
  std::memcpy(out, &bits, sizeof(bits));
}

}  // namespace

std::string_view EmbeddingKindName(EmbeddingKind kind) {
  return kind == EmbeddingKind::kImage ? "image" : "caption";
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t dim,
                                 std::vector<std::string> row_ids,
                                 std::vector<float> data, EmbeddingKind kind,
                                 std::string source_model)
    : dim_(dim),
      row_ids_(std::move(row_ids)),
      data_(std::move(data)),
      kind_(kind),
      source_model_(std::move(source_model)) {
  if (dim_ == 0) throw Error("embedding dim must be positive");
  if (data_.size() != row_ids_.size() * dim_) {
    throw Error(fmt::format(
        "embedding size mismatch: {} values for {} rows of dim {}",
        data_.size(), row_ids_.size(), dim_));
  }
  index_.reserve(row_ids_.size());
  for (std::size_t i = 0; i < row_ids_.size(); ++i) {
    if (!index_.emplace(row_ids_[i], i).second) {
      throw Error(fmt::format("duplicate embedding row id: {}", row_ids_[i]));
    }
    for (const float v : row(i)) {
      if (!std::isfinite(v)) {
        throw Error(fmt::format("non-finite embedding entry in row {}",
                                row_ids_[i]));
      }
    }
  }
}

std::vector<double> EmbeddingMatrix::RowAsDouble(std::size_t i) const {
  const auto r = row(i);
  return {r.begin(), r.end()};
}

std::optional<std::size_t> EmbeddingMatrix::FindRow(
    std::string_view object_id) const {
  const auto it = index_.find(std::string(object_id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

Matrix EmbeddingMatrix::ToMatrix() const {
  return Matrix(rows(), dim_, std::vector<double>(data_.begin(), data_.end()));
}

const CropRecord* CorpusBundle::CropFor(std::string_view object_id) const {
  const auto it = crop_index_.find(std::string(object_id));
  return it == crop_index_.end() ? nullptr : &crops[it->second];
}

const CaptionRecord* CorpusBundle::CaptionFor(std::string_view object_id) const {
  if (!captions) return nullptr;
  const auto it = caption_index_.find(std::string(object_id));
  return it == caption_index_.end() ? nullptr : &(*captions)[it->second];
}

void CorpusBundle::Reindex() {
  crop_index_.clear();
  caption_index_.clear();
  for (std::size_t i = 0; i < crops.size(); ++i) {
    crop_index_.emplace(crops[i].object_id, i);
  }
  if (captions) {
    for (std::size_t i = 0; i < captions->size(); ++i) {
      caption_index_.emplace((*captions)[i].object_id, i);
    }
  }
}

std::string ReadFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void WriteFile(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(fmt::format("write failed for {}", path.string()));
}

CropRecordSet ParseCropRecords(std::string_view text) {
  CropRecordSet crops;
  std::unordered_map<std::string, std::size_t> first_seen;
  ForEachLine(text, [&](std::size_t line_no, std::string_view line) {
    const json obj = ParseLine(line, line_no);
    CropRecord rec;
    rec.object_id = RequireString(obj, "object_id", line_no);
    rec.scene_id = RequireString(obj, "scene_id", line_no);
    rec.image_id = RequireString(obj, "image_id", line_no);
    rec.detector_class = RequireString(obj, "detector_class", line_no);
    const json& bbox = RequireKey(obj, "bbox", line_no);
    if (!bbox.is_array() || bbox.size() != 4) {
      throw Error(fmt::format("line {}: bbox must be [x, y, w, h]", line_no));
    }
    rec.bbox = {RequireNumber(bbox[0], "bbox.x", line_no),
                RequireNumber(bbox[1], "bbox.y", line_no),
                RequireNumber(bbox[2], "bbox.w", line_no),
                RequireNumber(bbox[3], "bbox.h", line_no)};
    if (rec.bbox.x < 0 || rec.bbox.y < 0) {
      throw Error(fmt::format("line {}: negative bbox origin for {}", line_no,
                              rec.object_id));
    }
    if (!(rec.bbox.w > 0) || !(rec.bbox.h > 0)) {
      throw Error(fmt::format("line {}: negative bbox extent for {}", line_no,
                              rec.object_id));
    }
    rec.detector_confidence = RequireNumber(
        RequireKey(obj, "detector_confidence", line_no), "detector_confidence",
        line_no);
    if (!(rec.detector_confidence >= 0.0 && rec.detector_confidence <= 1.0)) {
      throw Error(fmt::format("line {}: detector_confidence {} outside [0, 1]",
                              line_no, rec.detector_confidence));
    }
    const auto [it, inserted] = first_seen.emplace(rec.object_id, line_no);
    if (!inserted) {
      throw Error(fmt::format("line {}: duplicate object_id \"{}\" (first on line {})",
                              line_no, rec.object_id, it->second));
    }
    crops.push_back(std::move(rec));
  });
  return crops;
}

CropRecordSet LoadCropRecords(const std::filesystem::path& path) {
  CropRecordSet crops;
  try {
    crops = ParseCropRecords(ReadFile(path));
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
  if (crops.empty()) {
    log::Warn(fmt::format("{}: crops file contains no records", path.string()));
  }
  return crops;
}

EmbeddingMatrix LoadEmbeddingMatrix(const std::filesystem::path& data_path,
                                    const std::filesystem::path& sidecar_path) {
  json sidecar;
  try {
    sidecar = json::parse(ReadFile(sidecar_path));
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("{}: malformed sidecar: {}", sidecar_path.string(),
                            e.what()));
  }
  const auto field = [&](const char* key) -> const json& {
    const auto it = sidecar.find(key);
    if (it == sidecar.end()) {
      throw Error(fmt::format("{}: sidecar missing '{}'", sidecar_path.string(), key));
    }
    return *it;
  };
  const json& n_rows_v = field("n_rows");
  const json& dim_v = field("dim");
  const json& ids_v = field("row_ids");
  if (!n_rows_v.is_number_unsigned() || !dim_v.is_number_unsigned() ||
      !ids_v.is_array()) {
    throw Error(fmt::format("{}: n_rows/dim must be non-negative integers and "
                            "row_ids an array",
                            sidecar_path.string()));
  }
  const auto n_rows = n_rows_v.get<std::size_t>();
  const auto dim = dim_v.get<std::size_t>();
  std::vector<std::string> row_ids;
  row_ids.reserve(ids_v.size());
  for (const auto& id : ids_v) {
    if (!id.is_string()) {
      throw Error(fmt::format("{}: row_ids must be strings", sidecar_path.string()));
    }
    row_ids.push_back(id.get<std::string>());
  }
  if (row_ids.size() != n_rows) {
    throw Error(fmt::format("{}: sidecar declares n_rows={} but lists {} row_ids",
                            sidecar_path.string(), n_rows, row_ids.size()));
  }
  EmbeddingKind kind = EmbeddingKind::kImage;
  if (const auto it = sidecar.find("kind"); it != sidecar.end()) {
    const std::string k = it->get<std::string>();
    if (k == "caption") {
      kind = EmbeddingKind::kCaption;
    } else if (k != "image") {
      throw Error(fmt::format("{}: unknown kind '{}'", sidecar_path.string(), k));
    }
  }
  std::string source_model;
  if (const auto it = sidecar.find("source_model"); it != sidecar.end()) {
    source_model = it->get<std::string>();
  }

  const std::string bytes = ReadFile(data_path);
  const std::size_t expected = n_rows * dim * sizeof(float);
  if (bytes.size() != expected) {
    throw Error(fmt::format(
        "{}: size mismatch: {} bytes present, {} x {} x 4 = {} expected",
        data_path.string(), bytes.size(), n_rows, dim, expected));
  }
  std::vector<float> data(n_rows * dim);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = LoadLittleEndianFloat(bytes.data() + i * sizeof(float));
  }
  for (std::size_t r = 0; r < n_rows; ++r) {
    for (std::size_t c = 0; c < dim; ++c) {
      if (!std::isfinite(data[r * dim + c])) {
        throw Error(fmt::format("{}: NaN/Inf entry in row {} (object {})",
                                data_path.string(), r, row_ids[r]));
      }
    }
  }
  try {
    return EmbeddingMatrix(dim, std::move(row_ids), std::move(data), kind,
                           std::move(source_model));
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", sidecar_path.string(), e.what()));
  }
}

std::vector<CaptionRecord> LoadCaptionRecords(const std::filesystem::path& path) {
  std::vector<CaptionRecord> captions;
  std::unordered_set<std::string> seen;
  try {
    ForEachLine(ReadFile(path), [&](std::size_t line_no, std::string_view line) {
      const json obj = ParseLine(line, line_no);
      CaptionRecord rec;
      rec.object_id = RequireString(obj, "object_id", line_no);
      rec.caption_text = RequireString(obj, "caption_text", line_no);
      if (const auto it = obj.find("caption_embedding_row");
          it != obj.end() && !it->is_null()) {
        if (!it->is_number_unsigned()) {
          throw Error(fmt::format(
              "line {}: caption_embedding_row must be a non-negative integer",
              line_no));
        }
        rec.caption_embedding_row = it->get<std::size_t>();
      }
      if (!seen.insert(rec.object_id).second) {
        throw Error(fmt::format("line {}: duplicate caption for \"{}\"", line_no,
                                rec.object_id));
      }
      captions.push_back(std::move(rec));
    });
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
  return captions;
}

SceneIndex GroupByScene(std::span<const CropRecord> crops) {
  SceneIndex index;
  for (const auto& c : crops) index[c.scene_id].push_back(c.object_id);
  return index;
}

ValidationReport ValidateCorpus(const CorpusBundle& bundle) {
  ValidationReport report;
  auto& v = report.violations;

  std::set<std::string> crop_ids;
  for (const auto& c : bundle.crops) {
    if (!crop_ids.insert(c.object_id).second) {
      v.push_back(fmt::format("duplicate object: {}", c.object_id));
    }
    if (!(c.bbox.w > 0) || !(c.bbox.h > 0) || c.bbox.x < 0 || c.bbox.y < 0) {
      v.push_back(fmt::format("invalid bbox: {}", c.object_id));
    }
    if (!(c.detector_confidence >= 0.0 && c.detector_confidence <= 1.0)) {
      v.push_back(fmt::format("confidence out of range: {}", c.object_id));
    }
  }

  const auto& emb = bundle.image_embeddings;
  std::set<std::string> emb_ids(emb.row_ids().begin(), emb.row_ids().end());
  for (const auto& id : crop_ids) {
    if (!emb_ids.contains(id)) v.push_back(fmt::format("missing embedding: {}", id));
  }
  for (const auto& id : emb.row_ids()) {
    if (!crop_ids.contains(id)) v.push_back(fmt::format("orphan embedding: {}", id));
  }
  if (emb.rows() > 0 && emb.dim() < 2) {
    v.push_back(fmt::format("embedding dim {} below 2", emb.dim()));
  }

  if (bundle.captions) {
    std::set<std::string> seen;
    for (const auto& cap : *bundle.captions) {
      if (!crop_ids.contains(cap.object_id)) {
        v.push_back(fmt::format("orphan caption: {}", cap.object_id));
      }
      if (!seen.insert(cap.object_id).second) {
        v.push_back(fmt::format("duplicate caption: {}", cap.object_id));
      }
      if (cap.caption_embedding_row) {
        if (!bundle.caption_embeddings) {
          v.push_back(fmt::format("caption embedding row without caption matrix: {}",
                                  cap.object_id));
        } else if (*cap.caption_embedding_row >= bundle.caption_embeddings->rows()) {
          v.push_back(fmt::format("caption embedding row out of range: {}",
                                  cap.object_id));
        }
      }
    }
  }
  if (bundle.caption_embeddings && emb.rows() > 0 &&
      bundle.caption_embeddings->rows() > 0 &&
      bundle.caption_embeddings->dim() != emb.dim()) {
    v.push_back(fmt::format("caption embedding dim {} differs from image dim {}",
                            bundle.caption_embeddings->dim(), emb.dim()));
  }

  std::map<std::string, std::string> scene_of;
  for (const auto& [scene, ids] : bundle.scenes) {
    for (const auto& id : ids) {
      if (!crop_ids.contains(id)) {
        v.push_back(fmt::format("scene {} lists unknown object: {}", scene, id));
      }
      const auto [it, inserted] = scene_of.emplace(id, scene);
      if (!inserted) {
        v.push_back(fmt::format("object in several scenes: {}", id));
      }
    }
  }
  for (const auto& c : bundle.crops) {
    const auto it = scene_of.find(c.object_id);
    if (it == scene_of.end()) {
      v.push_back(fmt::format("object missing from scene index: {}", c.object_id));
    } else if (it->second != c.scene_id) {
      v.push_back(fmt::format("scene mismatch: {}", c.object_id));
    }
  }
  return report;
}

CorpusBundle LoadCorpus(const CorpusPaths& paths) {
  CorpusBundle bundle;
  bundle.crops = LoadCropRecords(paths.crops);
  bundle.image_embeddings = LoadEmbeddingMatrix(paths.image_embeddings, paths.image_sidecar);
  if (paths.captions) bundle.captions = LoadCaptionRecords(*paths.captions);
  if (paths.caption_embeddings) {
    if (!paths.caption_sidecar) {
      throw Error("caption embeddings given without a sidecar");
    }
    bundle.caption_embeddings =
        LoadEmbeddingMatrix(*paths.caption_embeddings, *paths.caption_sidecar);
  }
  bundle.scenes = GroupByScene(bundle.crops);
  bundle.Reindex();
  return bundle;
}

std::string SerializeCropRecords(std::span<const CropRecord> crops) {
  std::string out;
  for (const auto& c : crops) {
    ordered_json obj;
    obj["object_id"] = c.object_id;
    obj["scene_id"] = c.scene_id;
    obj["image_id"] = c.image_id;
    obj["bbox"] = {c.bbox.x, c.bbox.y, c.bbox.w, c.bbox.h};
    obj["detector_class"] = c.detector_class;
    obj["detector_confidence"] = c.detector_confidence;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string SerializeCaptionRecords(std::span<const CaptionRecord> captions) {
  std::string out;
  for (const auto& c : captions) {
    ordered_json obj;
    obj["object_id"] = c.object_id;
    obj["caption_text"] = c.caption_text;
    if (c.caption_embedding_row) {
      obj["caption_embedding_row"] = *c.caption_embedding_row;
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string SerializeSidecar(const EmbeddingMatrix& matrix) {
  ordered_json obj;
  obj["n_rows"] = matrix.rows();
  obj["dim"] = matrix.dim();
  obj["row_ids"] = matrix.row_ids();
  obj["kind"] = EmbeddingKindName(matrix.kind());
  obj["source_model"] = matrix.source_model();
  return obj.dump(2) + "\n";
}

std::string SerializeEmbeddingData(const EmbeddingMatrix& matrix) {
  std::string bytes(matrix.data().size() * sizeof(float), '\0');
  for (std::size_t i = 0; i < matrix.data().size(); ++i) {
    StoreLittleEndianFloat(matrix.data()[i], bytes.data() + i * sizeof(float));
  }
  return bytes;
}

void WriteCropRecords(const std::filesystem::path& path,
                      std::span<const CropRecord> crops) {
  WriteFile(path, SerializeCropRecords(crops));
}

void WriteCaptionRecords(const std::filesystem::path& path,
                         std::span<const CaptionRecord> captions) {
  WriteFile(path, SerializeCaptionRecords(captions));
}

void WriteEmbeddingMatrix(const EmbeddingMatrix& matrix,
                          const std::filesystem::path& data_path,
                          const std::filesystem::path& sidecar_path) {
  WriteFile(data_path, SerializeEmbeddingData(matrix));
  WriteFile(sidecar_path, SerializeSidecar(matrix));
}

}  // namespace raremine
