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

// Scene-level selection strategies and their explainable manifests.
//
// The budget unit is the scene: a manifest spends floor(random_fraction * S)
// scenes on uniform random picks and floor(mined_fraction * S) on a mined
// pool, S being the scene count. Random picks never repeat a mined scene.
//
//   random              floor((random + mined) * S) random scenes
//   random_rare         mined pool = scenes with an object whose R = 1
//   random_target       mined pool = scenes with an outlier (O > 0) whose top
//                       concept is a target
//   random_target_plus  as random_target, but objects whose detector class
//                       maps to a target concept also qualify, whatever
//                       their outlier status
//
// A pool larger than its quota is subsampled with the seeded generator; a
// smaller pool is taken whole and a warning recorded.

#ifndef RAREMINE_SELECTION_H_
#define RAREMINE_SELECTION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raremine/assessment.h"
#include "raremine/corpus.h"

namespace raremine {

enum class StrategyKind { kRandom, kRandomRare, kRandomTarget, kRandomTargetPlus };

std::string_view StrategyKindName(StrategyKind kind);
// Throws ConfigError on unknown names.
StrategyKind ParseStrategyKind(std::string_view name);

struct StrategySpec {
  StrategyKind kind = StrategyKind::kRandomTarget;
  double random_fraction = 0.10;
  double mined_fraction = 0.10;
  std::set<std::string> target_concepts;
  std::uint64_t seed = 0;

  // Throws ConfigError when fractions leave [0, 1], sum above 1, or a target
  // kind has no target concepts.
  void Validate() const;
};

enum class SceneReason { kRandom, kTargetHit, kRareHit };

std::string_view SceneReasonName(SceneReason reason);

struct EvidenceObject {
  std::string object_id;
  std::string detector_class;
  std::string top_concept;
  double top_score = 0.0;
  std::uint8_t o_combined = 0;
  std::uint8_t r_flag = 0;
  // "outlier" or "near_target": which gate admitted the object.
  std::string gate;
};

struct SceneExplanation {
  std::string scene_id;
  SceneReason reason = SceneReason::kRandom;
  std::size_t evidence_total = 0;
  // At most kMaxEvidence entries, in canonical object order.
  std::vector<EvidenceObject> evidence;
};

struct SelectionCounts {
  std::size_t total_scenes = 0;
  std::size_t random_quota = 0;
  std::size_t mined_quota = 0;
  std::size_t mined_pool = 0;
  std::size_t mined_selected = 0;
  std::size_t random_selected = 0;
  std::size_t selected = 0;
};

struct SelectionManifest {
  static constexpr std::size_t kMaxEvidence = 20;

  StrategySpec strategy;
  // Sorted, duplicate free.
  std::vector<std::string> selected_scenes;
  // One per selected scene, sorted by scene id.
  std::vector<SceneExplanation> explanations;
  SelectionCounts counts;
  std::vector<std::string> warnings;

  const SceneExplanation* Find(std::string_view scene_id) const;

  // Stable key order: strategy, seed, scenes, explanations, counts, warnings.
  std::string Serialize() const;
  static SelectionManifest Parse(std::string_view json_text);
};

// Detector class -> candidate concept classes. Unmapped classes map to
// themselves.
class NearTargetMap {
 public:
  NearTargetMap() = default;
  explicit NearTargetMap(std::map<std::string, std::set<std::string>> mapping)
      : mapping_(std::move(mapping)) {}

  // truck -> {construction_vehicle, truck, trailer}.
  static NearTargetMap Default();

  std::set<std::string> Map(std::string_view detector_class) const;
  bool Touches(std::string_view detector_class,
               const std::set<std::string>& concepts) const;
  const std::map<std::string, std::set<std::string>>& mapping() const {
    return mapping_;
  }

 private:
  std::map<std::string, std::set<std::string>> mapping_;
};

using ObjectPredicate = std::function<bool(const ObjectAssessment&)>;

// Scenes with at least one object whose top concept is in target_concepts
// (and that passes `eligible`, when given). Throws Error when a target is
// not in known_concepts or an indexed object has no assessment.
std::set<std::string> SelectTargetScenes(const SceneIndex& scenes,
                                         std::span<const ObjectAssessment> assessments,
                                         const std::set<std::string>& target_concepts,
                                         const std::set<std::string>& known_concepts,
                                         const ObjectPredicate& eligible = nullptr);

// Scenes with at least one object whose rare flag is set.
std::set<std::string> SelectRareScenes(const SceneIndex& scenes,
                                       std::span<const ObjectAssessment> assessments);

// floor(fraction * |all_scenes|) scenes drawn uniformly without replacement
// from all_scenes minus exclude. Takes the whole pool, with a warning, when
// it is smaller than the quota.
std::set<std::string> RandomSampleScenes(std::span<const std::string> all_scenes,
                                         double fraction, std::uint64_t seed,
                                         const std::set<std::string>& exclude);

// `assessments` may be empty for StrategyKind::kRandom. Throws ConfigError on
// an invalid spec.
SelectionManifest BuildManifest(const SceneIndex& scenes,
                                std::span<const ObjectAssessment> assessments,
                                const StrategySpec& spec,
                                const NearTargetMap& near_target,
                                const std::set<std::string>& known_concepts);

}  // namespace raremine

#endif  // RAREMINE_SELECTION_H_
