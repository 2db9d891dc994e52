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

// Config-driven orchestration of the mining stages with content-hash caching.
//
// Run configuration (JSON; relative paths resolve against the config file):
//
//   {
//     "corpus": {"crops": ..., "image_embeddings": ..., "image_sidecar": ...,
//                "captions": ..., "caption_embeddings": ...,
//                "caption_sidecar": ...},
//     "vocabulary": ...,
//     "output_dir": "out",
//     "seed": 0,
//     "threads": 0,
//     "iforest": {"n_trees": 100, "subsample_size": 256, "contamination": 0.2},
//     "tsne": {"perplexity": 30, "learning_rate": 200, "n_iters": 1000,
//              "early_exaggeration": 12, "exaggeration_iters": 250},
//     "knn": {"k": 10, "mode": "quantile", "quantile": 0.8, "tau": 0},
//     "lof": {"n_neighbors": 20, "contamination": 0.2, "ensemble": "union"},
//     "class_aware": {"enabled": false, "contamination": {"bicycle": 0.3}},
//     "similarity": {"text_weight": 0.5, "image_weight": 0.5},
//     "strategy": {"kind": "random_target", "random_fraction": 0.1,
//                  "mined_fraction": 0.1, "target_concepts": ["bicycle"]},
//     "near_target": {"truck": ["construction_vehicle", "truck", "trailer"]}
//   }
//
// Only "corpus" and "vocabulary" are required; caption files are optional.
// Unknown keys are rejected. Stage seeds derive from the global seed:
// DeriveSeed(seed, "iforest") for the forest and DeriveSeed(seed, "tsne") for
// the layout; selection draws from DeriveSeed(seed, "mined") and
// DeriveSeed(seed, "random").
//
// Output directory:
//   iforest_scores.csv, layout.csv, outliers.csv, assessments.jsonl,
//   cache.json, manifest.json, plots/, explain/
//
// When "lof" is present, O_IF is the union or intersection of the forest flags
// and LOF flags on the embedding. With "class_aware" enabled, the forest flags
// come from one forest per detector class.

#ifndef RAREMINE_PIPELINE_H_
#define RAREMINE_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "raremine/assessment.h"
#include "raremine/concepts.h"
#include "raremine/corpus.h"
#include "raremine/iforest.h"
#include "raremine/outliers.h"
#include "raremine/report.h"
#include "raremine/selection.h"
#include "raremine/tables.h"
#include "raremine/tsne.h"

namespace raremine {

struct OutlierStageParams {
  IForestParams iforest;
  std::optional<LofParams> lof;
  EnsembleMode ensemble = EnsembleMode::kUnion;
  bool class_aware = false;
  std::map<std::string, double> class_contamination;
};

struct RunConfig {
  CorpusPaths corpus;
  std::filesystem::path vocabulary;
  std::filesystem::path output_dir;
  std::uint64_t seed = 0;
  // <= 0 means WorkerCount().
  int threads = 0;
  OutlierStageParams outlier;
  TsneConfig tsne;
  KnnOutlierParams knn;
  SimilarityWeights weights;
  StrategySpec strategy;
  NearTargetMap near_target = NearTargetMap::Default();

  // Sets the global seed and every derived stage seed.
  void SetSeed(std::uint64_t global_seed);
  int workers() const { return threads > 0 ? threads : -1; }
};

// Throws ConfigError on syntax errors, unknown or mistyped keys, values out of
// range, and referenced files that do not exist.
RunConfig ParseRunConfig(std::string_view json_text,
                         const std::filesystem::path& base_dir);
RunConfig LoadRunConfig(const std::filesystem::path& path);

namespace output_files {
inline constexpr std::string_view kIForest = "iforest_scores.csv";
inline constexpr std::string_view kLayout = "layout.csv";
inline constexpr std::string_view kOutliers = "outliers.csv";
inline constexpr std::string_view kAssessments = "assessments.jsonl";
inline constexpr std::string_view kCache = "cache.json";
inline constexpr std::string_view kManifest = "manifest.json";
}  // namespace output_files

// Forest scores and O_IF flags, with the optional LOF ensemble and
// class-aware variants.
std::vector<IForestTableRow> ComputeIForestStage(const EmbeddingMatrix& embeddings,
                                                 std::span<const CropRecord> crops,
                                                 const OutlierStageParams& params,
                                                 int workers = -1);

// kNN distances on the layout, O_tsne flags and the fused O.
std::vector<OutlierRecord> ComputeOutlierStage(std::span<const IForestTableRow> iforest,
                                               const Layout2D& layout,
                                               const KnnOutlierParams& knn,
                                               int workers = -1);

ValidationReport RunValidate(const RunConfig& config);

struct StageStatus {
  std::string stage;
  bool cached = false;
};

struct MineSummary {
  std::vector<StageStatus> stages;
  std::size_t objects = 0;
  std::size_t o_if = 0;
  std::size_t o_tsne = 0;
  std::size_t outliers = 0;
  std::size_t rare = 0;
  std::size_t target = 0;
};

// Runs forest -> t-SNE -> kNN fusion -> concept assessment, writing every
// stage table. A stage whose cache key and output hashes match cache.json is
// skipped without touching its files. A cache file that cannot be read is
// reported as a warning and every stage recomputes. Stage failures are
// rethrown as Error prefixed with the stage name.
MineSummary RunMine(const RunConfig& config, bool use_cache = true);

// Builds and writes manifest.json. Random strategies need only the crops;
// the others need assessments.jsonl from a previous mine.
SelectionManifest RunSelect(const RunConfig& config);

// Writes plots/scatter_<key>.svg and returns its path.
std::filesystem::path RunPlotScatter(const RunConfig& config, ColorKey key);
// Writes plots/concepts_<object>.svg and returns its path.
std::filesystem::path RunPlotBars(const RunConfig& config, std::string_view object_id,
                                  std::size_t top_m = 10);

// Report text; also written to explain/<scene>.txt or explain/<object>.txt.
std::string RunExplainScene(const RunConfig& config, std::string_view scene_id);
std::string RunExplainObject(const RunConfig& config, std::string_view object_id);

}  // namespace raremine

#endif  // RAREMINE_PIPELINE_H_
