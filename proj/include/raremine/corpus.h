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

// Portable on-disk corpus: detected object crops, their embeddings, optional
// captions, and the scene grouping used by selection.
//
// Files:
//   crops       UTF-8 JSON lines, one object per line with the keys
//               object_id, scene_id, image_id, bbox [x, y, w, h],
//               detector_class, detector_confidence.
//   embeddings  raw row-major float32 little-endian binary plus a JSON
//               sidecar {n_rows, dim, row_ids, kind, source_model}.
//   captions    UTF-8 JSON lines {object_id, caption_text,
//               caption_embedding_row (optional)}.
//
// Canonical object order is the row order of the image-embedding sidecar;
// every per-object vector produced downstream is indexed in that order.
// object_id is treated as globally unique and each object belongs to exactly
// one scene.

#ifndef RAREMINE_CORPUS_H_
#define RAREMINE_CORPUS_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "raremine/common.h"

namespace raremine {

struct BoundingBox {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

struct CropRecord {
  std::string object_id;
  std::string scene_id;
  std::string image_id;
  BoundingBox bbox;
  std::string detector_class;
  double detector_confidence = 0.0;

  friend bool operator==(const CropRecord&, const CropRecord&) = default;
};

using CropRecordSet = std::vector<CropRecord>;

enum class EmbeddingKind { kImage, kCaption };

std::string_view EmbeddingKindName(EmbeddingKind kind);

// N x D float32 matrix with one object id per row.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  // Throws Error on size mismatch, duplicate ids, or non-finite entries.
  EmbeddingMatrix(std::size_t dim, std::vector<std::string> row_ids,
                  std::vector<float> data,
                  EmbeddingKind kind = EmbeddingKind::kImage,
                  std::string source_model = "");

  std::size_t rows() const { return row_ids_.size(); }
  std::size_t dim() const { return dim_; }
  EmbeddingKind kind() const { return kind_; }
  const std::string& source_model() const { return source_model_; }
  const std::vector<std::string>& row_ids() const { return row_ids_; }
  const std::vector<float>& data() const { return data_; }

  std::span<const float> row(std::size_t i) const {
    return {data_.data() + i * dim_, dim_};
  }
  std::vector<double> RowAsDouble(std::size_t i) const;
  std::optional<std::size_t> FindRow(std::string_view object_id) const;

  // Widened copy for numeric stages.
  Matrix ToMatrix() const;

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> row_ids_;
  std::vector<float> data_;
  EmbeddingKind kind_ = EmbeddingKind::kImage;
  std::string source_model_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct CaptionRecord {
  std::string object_id;
  std::string caption_text;
  std::optional<std::size_t> caption_embedding_row;

  friend bool operator==(const CaptionRecord&, const CaptionRecord&) = default;
};

// scene_id -> object ids; std::map keeps scenes in lexicographic order.
using SceneIndex = std::map<std::string, std::vector<std::string>>;

struct CorpusBundle {
  CropRecordSet crops;
  EmbeddingMatrix image_embeddings;
  std::optional<std::vector<CaptionRecord>> captions;
  std::optional<EmbeddingMatrix> caption_embeddings;
  SceneIndex scenes;

  // Lookups by object id; nullptr when absent.
  const CropRecord* CropFor(std::string_view object_id) const;
  const CaptionRecord* CaptionFor(std::string_view object_id) const;
  // Rebuilds lookup tables; call after mutating crops or captions.
  void Reindex();

 private:
  std::unordered_map<std::string, std::size_t> crop_index_;
  std::unordered_map<std::string, std::size_t> caption_index_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool valid() const { return violations.empty(); }
};

struct CorpusPaths {
  std::filesystem::path crops;
  std::filesystem::path image_embeddings;
  std::filesystem::path image_sidecar;
  std::optional<std::filesystem::path> captions;
  std::optional<std::filesystem::path> caption_embeddings;
  std::optional<std::filesystem::path> caption_sidecar;
};

// Parses a crops file. Errors name the offending line (1-based). An empty
// file yields an empty set and a warning.
CropRecordSet LoadCropRecords(const std::filesystem::path& path);
CropRecordSet ParseCropRecords(std::string_view text);

EmbeddingMatrix LoadEmbeddingMatrix(const std::filesystem::path& data_path,
                                    const std::filesystem::path& sidecar_path);

std::vector<CaptionRecord> LoadCaptionRecords(const std::filesystem::path& path);

// Groups objects by scene, keeping the crop set's object order within each
// scene.
SceneIndex GroupByScene(std::span<const CropRecord> crops);

// Lists every alignment violation; never throws.
ValidationReport ValidateCorpus(const CorpusBundle& bundle);

CorpusBundle LoadCorpus(const CorpusPaths& paths);

// Canonical serializations. Loading then writing reproduces these bytes.
std::string SerializeCropRecords(std::span<const CropRecord> crops);
std::string SerializeCaptionRecords(std::span<const CaptionRecord> captions);
std::string SerializeSidecar(const EmbeddingMatrix& matrix);
std::string SerializeEmbeddingData(const EmbeddingMatrix& matrix);

void WriteCropRecords(const std::filesystem::path& path,
                      std::span<const CropRecord> crops);
void WriteCaptionRecords(const std::filesystem::path& path,
                         std::span<const CaptionRecord> captions);
void WriteEmbeddingMatrix(const EmbeddingMatrix& matrix,
                          const std::filesystem::path& data_path,
                          const std::filesystem::path& sidecar_path);

// File helpers shared by the loaders and the pipeline.
std::string ReadFile(const std::filesystem::path& path);
void WriteFile(const std::filesystem::path& path, std::string_view contents);

}  // namespace raremine

#endif  // RAREMINE_CORPUS_H_
