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

#include "raremine/pipeline.h"

#include <algorithm>
#include <exception>
#include <functional>
#include <initializer_list>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "json.hpp"
#include "raremine/hashing.h"
#include "raremine/log.h"
#include "raremine/rng.h"

namespace raremine {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Config parsing.

void CheckKeys(const json& obj, std::string_view where,
               std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError(fmt::format("config: {} must be an object", where));
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(fmt::format("config: unknown key {}.{}", where, key));
    }
  }
}

template <typename T>
T Get(const json& obj, std::string_view where, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!it->is_boolean()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (it->is_number_integer() && !it->is_number_unsigned()) throw ConfigError("");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!it->is_string()) throw ConfigError("");
    }
    return it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError(fmt::format("config: {}.{} has the wrong type", where, key));
  }
}

void Require(bool ok, std::string_view message) {
  if (!ok) throw ConfigError(fmt::format("config: {}", message));
}

fs::path ResolvePath(const json& obj, std::string_view where, const char* key,
                     const fs::path& base, bool required) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    if (required) throw ConfigError(fmt::format("config: missing {}.{}", where, key));
    return {};
  }
  if (!it->is_string() || it->get<std::string>().empty()) {
    throw ConfigError(fmt::format("config: {}.{} must be a non-empty path", where, key));
  }
  fs::path p(it->get<std::string>());
  if (p.is_relative()) p = base / p;
  return p.lexically_normal();
}

void RequireFile(const fs::path& p, std::string_view what) {
  std::error_code ec;
  if (!fs::is_regular_file(p, ec)) {
    throw ConfigError(fmt::format("config: {} file not found: {}", what, p.string()));
  }
}

CorpusPaths ParseCorpusPaths(const json& j, const fs::path& base) {
  CheckKeys(j, "corpus", {"crops", "image_embeddings", "image_sidecar", "captions",
                          "caption_embeddings", "caption_sidecar"});
  CorpusPaths p;
  p.crops = ResolvePath(j, "corpus", "crops", base, true);
  p.image_embeddings = ResolvePath(j, "corpus", "image_embeddings", base, true);
  p.image_sidecar = ResolvePath(j, "corpus", "image_sidecar", base, true);
  RequireFile(p.crops, "crops");
  RequireFile(p.image_embeddings, "image embedding");
  RequireFile(p.image_sidecar, "image sidecar");
  if (j.contains("captions")) {
    p.captions = ResolvePath(j, "corpus", "captions", base, true);
    RequireFile(*p.captions, "captions");
  }
  const bool has_data = j.contains("caption_embeddings");
  const bool has_sidecar = j.contains("caption_sidecar");
  Require(has_data == has_sidecar,
          "corpus.caption_embeddings and corpus.caption_sidecar go together");
  if (has_data) {
    p.caption_embeddings = ResolvePath(j, "corpus", "caption_embeddings", base, true);
    p.caption_sidecar = ResolvePath(j, "corpus", "caption_sidecar", base, true);
    RequireFile(*p.caption_embeddings, "caption embedding");
    RequireFile(*p.caption_sidecar, "caption sidecar");
  }
  return p;
}

void ParseIForest(const json& j, IForestParams& p) {
  CheckKeys(j, "iforest", {"n_trees", "subsample_size", "contamination"});
  p.n_trees = Get<std::size_t>(j, "iforest", "n_trees", p.n_trees);
  p.subsample_size = Get<std::size_t>(j, "iforest", "subsample_size", p.subsample_size);
  p.contamination = Get<double>(j, "iforest", "contamination", p.contamination);
  Require(p.n_trees >= 1, "iforest.n_trees must be at least 1");
  Require(p.subsample_size >= 2, "iforest.subsample_size must be at least 2");
  Require(p.contamination > 0.0 && p.contamination < 1.0,
          "iforest.contamination must lie in (0, 1)");
}

void ParseTsne(const json& j, TsneConfig& c) {
  CheckKeys(j, "tsne", {"perplexity", "learning_rate", "n_iters", "early_exaggeration",
                        "exaggeration_iters", "momentum_switch_iter",
                        "initial_momentum", "final_momentum"});
  c.perplexity = Get<double>(j, "tsne", "perplexity", c.perplexity);
  c.learning_rate = Get<double>(j, "tsne", "learning_rate", c.learning_rate);
  c.n_iters = Get<int>(j, "tsne", "n_iters", c.n_iters);
  c.early_exaggeration = Get<double>(j, "tsne", "early_exaggeration", c.early_exaggeration);
  c.exaggeration_iters = Get<int>(j, "tsne", "exaggeration_iters", c.exaggeration_iters);
  c.momentum_switch_iter =
      Get<int>(j, "tsne", "momentum_switch_iter", c.momentum_switch_iter);
  c.initial_momentum = Get<double>(j, "tsne", "initial_momentum", c.initial_momentum);
  c.final_momentum = Get<double>(j, "tsne", "final_momentum", c.final_momentum);
  Require(c.perplexity >= 1.0, "tsne.perplexity must be at least 1");
  Require(c.learning_rate > 0.0, "tsne.learning_rate must be positive");
  Require(c.n_iters >= 1, "tsne.n_iters must be at least 1");
  Require(c.early_exaggeration >= 1.0, "tsne.early_exaggeration must be at least 1");
  Require(c.exaggeration_iters >= 0, "tsne.exaggeration_iters must be non-negative");
  Require(c.momentum_switch_iter >= 0, "tsne.momentum_switch_iter must be non-negative");
  Require(c.initial_momentum >= 0.0 && c.initial_momentum < 1.0 &&
              c.final_momentum >= 0.0 && c.final_momentum < 1.0,
          "tsne momenta must lie in [0, 1)");
}

void ParseKnn(const json& j, KnnOutlierParams& p) {
  CheckKeys(j, "knn", {"k", "mode", "quantile", "tau"});
  p.k = Get<std::size_t>(j, "knn", "k", p.k);
  const auto mode = Get<std::string>(j, "knn", "mode", "quantile");
  if (mode == "quantile") {
    p.mode = ThresholdMode::kQuantile;
  } else if (mode == "absolute") {
    p.mode = ThresholdMode::kAbsolute;
  } else {
    throw ConfigError(fmt::format("config: knn.mode '{}' is not quantile or absolute", mode));
  }
  p.quantile = Get<double>(j, "knn", "quantile", p.quantile);
  p.tau = Get<double>(j, "knn", "tau", p.tau);
  Require(p.k >= 1, "knn.k must be at least 1");
  Require(p.quantile >= 0.0 && p.quantile <= 1.0, "knn.quantile must lie in [0, 1]");
  Require(p.mode != ThresholdMode::kAbsolute || j.contains("tau"),
          "knn.mode absolute needs knn.tau");
}

void ParseLof(const json& j, OutlierStageParams& p) {
  CheckKeys(j, "lof", {"n_neighbors", "contamination", "ensemble"});
  LofParams lof;
  lof.n_neighbors = Get<std::size_t>(j, "lof", "n_neighbors", lof.n_neighbors);
  lof.contamination = Get<double>(j, "lof", "contamination", lof.contamination);
  Require(lof.n_neighbors >= 1, "lof.n_neighbors must be at least 1");
  Require(lof.contamination > 0.0 && lof.contamination < 1.0,
          "lof.contamination must lie in (0, 1)");
  const auto mode = Get<std::string>(j, "lof", "ensemble", "union");
  if (mode == "union") {
    p.ensemble = EnsembleMode::kUnion;
  } else if (mode == "intersection") {
    p.ensemble = EnsembleMode::kIntersection;
  } else {
    throw ConfigError(
        fmt::format("config: lof.ensemble '{}' is not union or intersection", mode));
  }
  p.lof = lof;
}

void ParseClassAware(const json& j, OutlierStageParams& p) {
  CheckKeys(j, "class_aware", {"enabled", "contamination"});
  p.class_aware = Get<bool>(j, "class_aware", "enabled", false);
  if (const auto it = j.find("contamination"); it != j.end()) {
    Require(it->is_object(), "class_aware.contamination must map class -> fraction");
    for (const auto& [label, value] : it->items()) {
      Require(value.is_number(), "class_aware.contamination values must be numbers");
      const double c = value.get<double>();
      Require(c > 0.0 && c < 1.0, "class_aware.contamination values must lie in (0, 1)");
      p.class_contamination[label] = c;
    }
  }
}

void ParseStrategy(const json& j, StrategySpec& s) {
  CheckKeys(j, "strategy", {"kind", "random_fraction", "mined_fraction", "target_concepts"});
  s.kind = ParseStrategyKind(Get<std::string>(j, "strategy", "kind", "random_target"));
  s.random_fraction = Get<double>(j, "strategy", "random_fraction", s.random_fraction);
  s.mined_fraction = Get<double>(j, "strategy", "mined_fraction", s.mined_fraction);
  if (const auto it = j.find("target_concepts"); it != j.end()) {
    Require(it->is_array(), "strategy.target_concepts must be a list of names");
    for (const auto& t : *it) {
      Require(t.is_string(), "strategy.target_concepts must be a list of names");
      s.target_concepts.insert(t.get<std::string>());
    }
  }
}

NearTargetMap ParseNearTarget(const json& j) {
  Require(j.is_object(), "near_target must map detector class -> concept list");
  std::map<std::string, std::set<std::string>> mapping;
  for (const auto& [label, value] : j.items()) {
    Require(value.is_array(), "near_target values must be lists of concept names");
    for (const auto& c : value) {
      Require(c.is_string(), "near_target values must be lists of concept names");
      mapping[label].insert(c.get<std::string>());
    }
  }
  return NearTargetMap(std::move(mapping));
}

// ---------------------------------------------------------------------------
// Stage cache.

struct CacheEntry {
  std::string key;
  std::map<std::string, std::string> outputs;
};

using CacheState = std::map<std::string, CacheEntry>;

CacheState ReadCache(const fs::path& path) {
  CacheState state;
  std::error_code ec;
  if (!fs::exists(path, ec)) return state;
  try {
    const json doc = json::parse(ReadFile(path));
    if (doc.at("version").get<int>() != 1) throw Error("unsupported version");
    for (const auto& [stage, entry] : doc.at("stages").items()) {
      CacheEntry e;
      e.key = entry.at("key").get<std::string>();
      e.outputs = entry.at("outputs").get<std::map<std::string, std::string>>();
      state.emplace(stage, std::move(e));
    }
  } catch (const std::exception& e) {
    log::Warn(fmt::format("cache file {} is unreadable ({}); recomputing every stage",
                          path.string(), e.what()));
    state.clear();
  }
  return state;
}

std::string SerializeCache(const CacheState& state) {
  ordered_json doc;
  doc["version"] = 1;
  doc["stages"] = ordered_json::object();
  for (const auto& [stage, e] : state) {
    ordered_json entry;
    entry["key"] = e.key;
    entry["outputs"] = e.outputs;
    doc["stages"][stage] = std::move(entry);
  }
  return doc.dump(2) + "\n";
}

// Writes only when the bytes differ, so unchanged outputs keep their mtime.
void WriteIfChanged(const fs::path& path, std::string_view contents) {
  std::error_code ec;
  if (fs::is_regular_file(path, ec)) {
    if (ReadFile(path) == contents) return;
  }
  WriteFile(path, contents);
}

std::string FileHashOrEmpty(const std::optional<fs::path>& p) {
  return p ? Sha256File(*p) : std::string();
}

class StageRunner {
 public:
  StageRunner(fs::path dir, bool use_cache, MineSummary& summary)
      : dir_(std::move(dir)), use_cache_(use_cache), summary_(summary) {
    if (use_cache_) cache_ = ReadCache(dir_ / output_files::kCache);
  }

  // Returns the stage output text, from disk on a cache hit or from compute()
  // otherwise.
  std::string Run(const std::string& stage, const std::string& key,
                  std::string_view file, const std::function<std::string()>& compute) {
    const fs::path path = dir_ / file;
    if (use_cache_) {
      const auto it = cache_.find(stage);
      std::error_code ec;
      if (it != cache_.end() && it->second.key == key && fs::is_regular_file(path, ec)) {
        std::string text = ReadFile(path);
        const auto out = it->second.outputs.find(std::string(file));
        if (out != it->second.outputs.end() && out->second == Sha256Hex(text)) {
          summary_.stages.push_back({stage, true});
          return text;
        }
      }
    }
    std::string text;
    try {
      text = compute();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw Error(fmt::format("{} stage: {}", stage, e.what()));
    }
    WriteIfChanged(path, text);
    cache_[stage] = CacheEntry{key, {{std::string(file), Sha256Hex(text)}}};
    summary_.stages.push_back({stage, false});
    return text;
  }

  void Finish() { WriteIfChanged(dir_ / output_files::kCache, SerializeCache(cache_)); }

 private:
  fs::path dir_;
  bool use_cache_;
  MineSummary& summary_;
  CacheState cache_;
};

std::string StageKey(const ordered_json& parts) { return Sha256Hex(parts.dump()); }

// ---------------------------------------------------------------------------
// Shared loaders.

CorpusBundle LoadValidCorpus(const RunConfig& config) {
  CorpusBundle corpus = LoadCorpus(config.corpus);
  const auto report = ValidateCorpus(corpus);
  if (!report.valid()) {
    std::string message = fmt::format("corpus has {} violation(s)", report.violations.size());
    for (std::size_t i = 0; i < report.violations.size() && i < 10; ++i) {
      message += "\n  " + report.violations[i];
    }
    throw Error(message);
  }
  return corpus;
}

std::string ReadStageOutput(const RunConfig& config, std::string_view file) {
  const fs::path path = config.output_dir / file;
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Error(fmt::format("{} not found; run `raremine mine` first", path.string()));
  }
  return ReadFile(path);
}

std::string SafeFileStem(std::string_view id) {
  std::string out;
  for (const char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  return out;
}

SceneIndex LoadScenes(const RunConfig& config) {
  const auto crops = LoadCropRecords(config.corpus.crops);
  return GroupByScene(crops);
}

}  // namespace

void RunConfig::SetSeed(std::uint64_t global_seed) {
  seed = global_seed;
  outlier.iforest.seed = DeriveSeed(global_seed, "iforest");
  tsne.seed = DeriveSeed(global_seed, "tsne");
  strategy.seed = global_seed;
}

RunConfig ParseRunConfig(std::string_view json_text, const fs::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("config: syntax error: {}", e.what()));
  }
  CheckKeys(doc, "config",
            {"corpus", "vocabulary", "output_dir", "seed", "threads", "iforest", "tsne",
             "knn", "lof", "class_aware", "similarity", "strategy", "near_target"});
  RunConfig c;
  if (!doc.contains("corpus")) throw ConfigError("config: missing corpus");
  c.corpus = ParseCorpusPaths(doc.at("corpus"), base_dir);
  c.vocabulary = ResolvePath(doc, "config", "vocabulary", base_dir, true);
  RequireFile(c.vocabulary, "vocabulary");
  c.output_dir = doc.contains("output_dir")
                     ? ResolvePath(doc, "config", "output_dir", base_dir, true)
                     : (base_dir / "out").lexically_normal();
  c.threads = Get<int>(doc, "config", "threads", 0);
  Require(c.threads >= 0, "threads must be non-negative");
  if (doc.contains("iforest")) ParseIForest(doc.at("iforest"), c.outlier.iforest);
  if (doc.contains("tsne")) ParseTsne(doc.at("tsne"), c.tsne);
  if (doc.contains("knn")) ParseKnn(doc.at("knn"), c.knn);
  if (doc.contains("lof")) ParseLof(doc.at("lof"), c.outlier);
  if (doc.contains("class_aware")) ParseClassAware(doc.at("class_aware"), c.outlier);
  if (doc.contains("similarity")) {
    const auto& s = doc.at("similarity");
    CheckKeys(s, "similarity", {"text_weight", "image_weight"});
    try {
      c.weights = SimilarityWeights(Get<double>(s, "similarity", "text_weight", 0.5),
                                    Get<double>(s, "similarity", "image_weight", 0.5));
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw ConfigError(fmt::format("config: {}", e.what()));
    }
  }
  if (doc.contains("strategy")) ParseStrategy(doc.at("strategy"), c.strategy);
  if (doc.contains("near_target")) c.near_target = ParseNearTarget(doc.at("near_target"));
  c.SetSeed(Get<std::uint64_t>(doc, "config", "seed", 0));
  c.strategy.Validate();
  return c;
}

RunConfig LoadRunConfig(const fs::path& path) {
  std::string text;
  try {
    text = ReadFile(path);
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return ParseRunConfig(text, path.parent_path());
}

std::vector<IForestTableRow> ComputeIForestStage(const EmbeddingMatrix& embeddings,
                                                 std::span<const CropRecord> crops,
                                                 const OutlierStageParams& params,
                                                 int workers) {
  const Matrix x = embeddings.ToMatrix();
  const auto model = FitIsolationForest(x, params.iforest, workers);
  const auto scores = AnomalyScores(model, x, workers);
  FlagVector flags;
  if (params.class_aware) {
    std::unordered_map<std::string, const CropRecord*> by_id;
    for (const auto& c : crops) by_id.emplace(c.object_id, &c);
    std::vector<std::string> labels;
    for (const auto& id : embeddings.row_ids()) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) throw Error(fmt::format("no crop record for {}", id));
      labels.push_back(it->second->detector_class);
    }
    flags = ClassAwareOutliers(x, labels, params.class_contamination, params.iforest,
                               workers);
  } else {
    flags = ThresholdByContamination(scores, params.iforest.contamination);
  }
  if (params.lof) {
    const std::vector<FlagVector> sets = {flags, LofFlags(x, *params.lof, workers)};
    flags = EnsembleCombine(sets, params.ensemble);
  }
  std::vector<IForestTableRow> rows;
  rows.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    rows.push_back({embeddings.row_ids()[i], scores[i], flags[i]});
  }
  return rows;
}

std::vector<OutlierRecord> ComputeOutlierStage(std::span<const IForestTableRow> iforest,
                                               const Layout2D& layout,
                                               const KnnOutlierParams& knn,
                                               int workers) {
  if (iforest.size() != layout.row_ids.size()) {
    throw Error(fmt::format("{} forest rows but {} layout rows", iforest.size(),
                            layout.row_ids.size()));
  }
  for (std::size_t i = 0; i < iforest.size(); ++i) {
    if (iforest[i].object_id != layout.row_ids[i]) {
      throw Error(fmt::format("row {} is {} in the forest table but {} in the layout", i,
                              iforest[i].object_id, layout.row_ids[i]));
    }
  }
  const auto d = KnnMeanDistance(layout.y, knn.k, workers);
  const auto o_tsne = TsneOutlierFlags(d, knn);
  FlagVector o_if;
  for (const auto& r : iforest) o_if.push_back(r.o_if);
  const auto combined = CombineOutliers(o_tsne, o_if);
  std::vector<OutlierRecord> out;
  out.reserve(iforest.size());
  for (std::size_t i = 0; i < iforest.size(); ++i) {
    out.push_back({iforest[i].object_id, d[i], o_tsne[i], iforest[i].if_score, o_if[i],
                   combined[i]});
  }
  return out;
}

ValidationReport RunValidate(const RunConfig& config) {
  const CorpusBundle corpus = LoadCorpus(config.corpus);
  ValidationReport report = ValidateCorpus(corpus);
  const auto vocab = ConceptVocabulary::Load(config.vocabulary);
  if (corpus.image_embeddings.rows() > 0 && vocab.dim() != corpus.image_embeddings.dim()) {
    report.violations.push_back(fmt::format("vocabulary dim {} differs from embedding dim {}",
                                            vocab.dim(), corpus.image_embeddings.dim()));
  }
  for (const auto& t : config.strategy.target_concepts) {
    if (!vocab.Contains(t)) {
      report.violations.push_back(fmt::format("unknown target concept: {}", t));
    }
  }
  return report;
}

MineSummary RunMine(const RunConfig& config, bool use_cache) {
  const CorpusBundle corpus = LoadValidCorpus(config);
  const int workers = config.workers();
  const std::string image_hash = Sha256File(config.corpus.image_embeddings);
  const std::string sidecar_hash = Sha256File(config.corpus.image_sidecar);
  const std::string crops_hash = Sha256File(config.corpus.crops);

  MineSummary summary;
  summary.objects = corpus.image_embeddings.rows();
  StageRunner runner(config.output_dir, use_cache, summary);

  const auto& op = config.outlier;
  ordered_json if_key;
  if_key["stage"] = "iforest";
  if_key["image"] = image_hash;
  if_key["sidecar"] = sidecar_hash;
  if_key["crops"] = op.class_aware ? crops_hash : "";
  if_key["n_trees"] = op.iforest.n_trees;
  if_key["subsample_size"] = op.iforest.subsample_size;
  if_key["contamination"] = op.iforest.contamination;
  if_key["seed"] = op.iforest.seed;
  if_key["class_aware"] = op.class_aware;
  if_key["class_contamination"] = op.class_contamination;
  if (op.lof) {
    if_key["lof_neighbors"] = op.lof->n_neighbors;
    if_key["lof_contamination"] = op.lof->contamination;
    if_key["ensemble"] = op.ensemble == EnsembleMode::kUnion ? "union" : "intersection";
  }
  const std::string if_text =
      runner.Run("iforest", StageKey(if_key), output_files::kIForest, [&] {
        return SerializeIForestTable(
            ComputeIForestStage(corpus.image_embeddings, corpus.crops, op, workers));
      });

  const auto& t = config.tsne;
  ordered_json tsne_key;
  tsne_key["stage"] = "tsne";
  tsne_key["image"] = image_hash;
  tsne_key["sidecar"] = sidecar_hash;
  tsne_key["perplexity"] = t.perplexity;
  tsne_key["learning_rate"] = t.learning_rate;
  tsne_key["n_iters"] = t.n_iters;
  tsne_key["early_exaggeration"] = t.early_exaggeration;
  tsne_key["exaggeration_iters"] = t.exaggeration_iters;
  tsne_key["momentum_switch_iter"] = t.momentum_switch_iter;
  tsne_key["initial_momentum"] = t.initial_momentum;
  tsne_key["final_momentum"] = t.final_momentum;
  tsne_key["seed"] = t.seed;
  const std::string layout_text =
      runner.Run("tsne", StageKey(tsne_key), output_files::kLayout, [&] {
        Layout2D layout;
        layout.y = RunTsne(corpus.image_embeddings.ToMatrix(), t, workers);
        layout.row_ids = corpus.image_embeddings.row_ids();
        return SerializeLayoutTable(layout);
      });

  ordered_json out_key;
  out_key["stage"] = "outliers";
  out_key["iforest"] = Sha256Hex(if_text);
  out_key["layout"] = Sha256Hex(layout_text);
  out_key["k"] = config.knn.k;
  out_key["mode"] = config.knn.mode == ThresholdMode::kQuantile ? "quantile" : "absolute";
  out_key["quantile"] = config.knn.quantile;
  out_key["tau"] = config.knn.tau;
  const std::string outlier_text =
      runner.Run("outliers", StageKey(out_key), output_files::kOutliers, [&] {
        const auto rows = ParseIForestTable(if_text);
        const auto layout = ParseLayoutTable(layout_text);
        return SerializeOutlierTable(ComputeOutlierStage(rows, layout, config.knn, workers));
      });

  ordered_json as_key;
  as_key["stage"] = "assessments";
  as_key["outliers"] = Sha256Hex(outlier_text);
  as_key["crops"] = crops_hash;
  as_key["image"] = image_hash;
  as_key["sidecar"] = sidecar_hash;
  as_key["captions"] = FileHashOrEmpty(config.corpus.captions);
  as_key["caption_embeddings"] = FileHashOrEmpty(config.corpus.caption_embeddings);
  as_key["caption_sidecar"] = FileHashOrEmpty(config.corpus.caption_sidecar);
  as_key["vocabulary"] = Sha256File(config.vocabulary);
  as_key["text_weight"] = config.weights.text();
  as_key["image_weight"] = config.weights.image();
  const std::string assess_text =
      runner.Run("assessments", StageKey(as_key), output_files::kAssessments, [&] {
        const auto vocab = ConceptVocabulary::Load(config.vocabulary);
        const auto outliers = ParseOutlierTable(outlier_text);
        return SerializeAssessments(AssessCorpus(corpus, outliers, vocab, config.weights,
                                                 workers));
      });
  runner.Finish();

  for (const auto& a : ParseAssessments(assess_text)) {
    summary.o_if += a.o_if;
    summary.o_tsne += a.o_tsne;
    summary.outliers += a.o_combined > 0 ? 1 : 0;
    summary.rare += a.r_flag;
    summary.target += a.category == Category::kTarget ? 1 : 0;
  }
  return summary;
}

SelectionManifest RunSelect(const RunConfig& config) {
  const SceneIndex scenes = LoadScenes(config);
  std::vector<ObjectAssessment> assessments;
  std::set<std::string> known;
  if (config.strategy.kind != StrategyKind::kRandom) {
    assessments = ParseAssessments(ReadStageOutput(config, output_files::kAssessments));
    known = ConceptVocabulary::Load(config.vocabulary).names();
  }
  const auto manifest =
      BuildManifest(scenes, assessments, config.strategy, config.near_target, known);
  WriteIfChanged(config.output_dir / output_files::kManifest, manifest.Serialize());
  return manifest;
}

fs::path RunPlotScatter(const RunConfig& config, ColorKey key) {
  const auto layout = ParseLayoutTable(ReadStageOutput(config, output_files::kLayout));
  const auto assessments =
      ParseAssessments(ReadStageOutput(config, output_files::kAssessments));
  const auto svg = RenderScatter(AssessmentScatter(layout, assessments, key));
  const fs::path path =
      config.output_dir / "plots" / fmt::format("scatter_{}.svg", ColorKeyName(key));
  WriteIfChanged(path, svg);
  return path;
}

fs::path RunPlotBars(const RunConfig& config, std::string_view object_id,
                     std::size_t top_m) {
  const auto assessments =
      ParseAssessments(ReadStageOutput(config, output_files::kAssessments));
  const auto it = std::find_if(assessments.begin(), assessments.end(),
                               [&](const ObjectAssessment& a) { return a.object_id == object_id; });
  if (it == assessments.end()) throw Error(fmt::format("unknown object {}", object_id));
  BarChartSpec spec;
  spec.ranking = it->ranked;
  spec.top_m = top_m;
  spec.title = fmt::format("{} (detector: {}, top concept: {})", it->object_id,
                           it->detector_class, it->top_concept);
  const fs::path path = config.output_dir / "plots" /
                        fmt::format("concepts_{}.svg", SafeFileStem(object_id));
  WriteIfChanged(path, RenderConceptBars(spec));
  return path;
}

std::string RunExplainScene(const RunConfig& config, std::string_view scene_id) {
  const fs::path manifest_path = config.output_dir / output_files::kManifest;
  std::error_code ec;
  if (!fs::is_regular_file(manifest_path, ec)) {
    throw Error(fmt::format("{} not found; run `raremine select` first",
                            manifest_path.string()));
  }
  const auto manifest = SelectionManifest::Parse(ReadFile(manifest_path));
  std::vector<ObjectAssessment> assessments;
  if (fs::is_regular_file(config.output_dir / output_files::kAssessments, ec)) {
    assessments = ParseAssessments(ReadFile(config.output_dir / output_files::kAssessments));
  }
  const auto text = ExplainScene(manifest, LoadScenes(config), assessments, scene_id);
  WriteIfChanged(config.output_dir / "explain" / (SafeFileStem(scene_id) + ".txt"), text);
  return text;
}

std::string RunExplainObject(const RunConfig& config, std::string_view object_id) {
  const auto assessments =
      ParseAssessments(ReadStageOutput(config, output_files::kAssessments));
  const auto text = ExplainObject(assessments, object_id);
  WriteIfChanged(config.output_dir / "explain" / (SafeFileStem(object_id) + ".txt"), text);
  return text;
}

}  // namespace raremine
