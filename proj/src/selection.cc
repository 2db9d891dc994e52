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

#include "raremine/selection.h"

#include <algorithm>
#include <unordered_map>
#include <utility>

#include <fmt/format.h>

#include "json.hpp"
#include "raremine/log.h"
#include "raremine/rng.h"

namespace raremine {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

using AssessmentIndex = std::unordered_map<std::string, const ObjectAssessment*>;

AssessmentIndex IndexAssessments(std::span<const ObjectAssessment> assessments) {
  AssessmentIndex index;
  index.reserve(assessments.size());
  for (const auto& a : assessments) index.emplace(a.object_id, &a);
  return index;
}

const ObjectAssessment& Lookup(const AssessmentIndex& index, const std::string& id) {
  const auto it = index.find(id);
  if (it == index.end()) throw Error(fmt::format("no assessment for object {}", id));
  return *it->second;
}

struct Sample {
  std::set<std::string> scenes;
  std::string warning;
};

// Draws `quota` items from a sorted pool with a partial Fisher-Yates shuffle.
Sample DrawFromPool(std::vector<std::string> pool, std::size_t quota,
                    std::uint64_t seed, std::string_view what) {
  Sample out;
  if (pool.size() <= quota) {
    if (pool.size() < quota) {
      out.warning = fmt::format("{} pool has {} scene(s), below the quota of {}",
                                what, pool.size(), quota);
    }
    out.scenes.insert(pool.begin(), pool.end());
    return out;
  }
  Rng rng(seed);
  for (std::size_t i = 0; i < quota; ++i) {
    const std::size_t j = i + rng.UniformIndex(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  out.scenes.insert(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quota));
  return out;
}

Sample SampleRandom(std::span<const std::string> all_scenes, std::size_t quota,
                    std::uint64_t seed, const std::set<std::string>& exclude) {
  std::vector<std::string> pool;
  pool.reserve(all_scenes.size());
  for (const auto& s : all_scenes) {
    if (!exclude.contains(s)) pool.push_back(s);
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return DrawFromPool(std::move(pool), quota, seed, "random");
}

ordered_json EvidenceToJson(const EvidenceObject& e) {
  ordered_json j;
  j["object_id"] = e.object_id;
  j["detector_class"] = e.detector_class;
  j["top_concept"] = e.top_concept;
  j["top_score"] = e.top_score;
  j["o_combined"] = e.o_combined;
  j["r_flag"] = e.r_flag;
  j["gate"] = e.gate;
  return j;
}

SceneReason ParseSceneReason(std::string_view name) {
  if (name == "random") return SceneReason::kRandom;
  if (name == "target_hit") return SceneReason::kTargetHit;
  if (name == "rare_hit") return SceneReason::kRareHit;
  throw Error(fmt::format("manifest: unknown reason '{}'", name));
}

}  // namespace

std::string_view StrategyKindName(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kRandom:
      return "random";
    case StrategyKind::kRandomRare:
      return "random_rare";
    case StrategyKind::kRandomTarget:
      return "random_target";
    case StrategyKind::kRandomTargetPlus:
      return "random_target_plus";
  }
  return "random";
}

StrategyKind ParseStrategyKind(std::string_view name) {
  if (name == "random") return StrategyKind::kRandom;
  if (name == "random_rare") return StrategyKind::kRandomRare;
  if (name == "random_target") return StrategyKind::kRandomTarget;
  if (name == "random_target_plus") return StrategyKind::kRandomTargetPlus;
  throw ConfigError(fmt::format("unknown strategy '{}'", name));
}

void StrategySpec::Validate() const {
  const auto in_unit = [](double f) { return f >= 0.0 && f <= 1.0; };
  if (!in_unit(random_fraction) || !in_unit(mined_fraction)) {
    throw ConfigError(fmt::format("strategy fractions {} / {} must lie in [0, 1]",
                                  random_fraction, mined_fraction));
  }
  if (random_fraction + mined_fraction > 1.0 + 1e-12) {
    throw ConfigError(fmt::format("strategy fractions sum to {} > 1",
                                  random_fraction + mined_fraction));
  }
  if ((kind == StrategyKind::kRandomTarget || kind == StrategyKind::kRandomTargetPlus) &&
      target_concepts.empty()) {
    throw ConfigError(fmt::format("strategy {} needs target concepts",
                                  StrategyKindName(kind)));
  }
}

std::string_view SceneReasonName(SceneReason reason) {
  switch (reason) {
    case SceneReason::kRandom:
      return "random";
    case SceneReason::kTargetHit:
      return "target_hit";
    case SceneReason::kRareHit:
      return "rare_hit";
  }
  return "random";
}

const SceneExplanation* SelectionManifest::Find(std::string_view scene_id) const {
  const auto it = std::lower_bound(
      explanations.begin(), explanations.end(), scene_id,
      [](const SceneExplanation& e, std::string_view id) { return e.scene_id < id; });
  if (it == explanations.end() || it->scene_id != scene_id) return nullptr;
  return &*it;
}

std::string SelectionManifest::Serialize() const {
  ordered_json doc;
  ordered_json s;
  s["kind"] = StrategyKindName(strategy.kind);
  s["random_fraction"] = strategy.random_fraction;
  s["mined_fraction"] = strategy.mined_fraction;
  s["target_concepts"] = strategy.target_concepts;
  doc["strategy"] = std::move(s);
  doc["seed"] = strategy.seed;
  doc["scenes"] = selected_scenes;
  doc["explanations"] = ordered_json::array();
  for (const auto& e : explanations) {
    ordered_json j;
    j["scene_id"] = e.scene_id;
    j["reason"] = SceneReasonName(e.reason);
    j["evidence_total"] = e.evidence_total;
    j["evidence"] = ordered_json::array();
    for (const auto& ev : e.evidence) j["evidence"].push_back(EvidenceToJson(ev));
    doc["explanations"].push_back(std::move(j));
  }
  ordered_json c;
  c["total_scenes"] = counts.total_scenes;
  c["random_quota"] = counts.random_quota;
  c["mined_quota"] = counts.mined_quota;
  c["mined_pool"] = counts.mined_pool;
  c["mined_selected"] = counts.mined_selected;
  c["random_selected"] = counts.random_selected;
  c["selected"] = counts.selected;
  doc["counts"] = std::move(c);
  doc["warnings"] = warnings;
  return doc.dump(2) + "\n";
}

SelectionManifest SelectionManifest::Parse(std::string_view json_text) {
  SelectionManifest m;
  try {
    const json doc = json::parse(json_text);
    const auto& s = doc.at("strategy");
    m.strategy.kind = ParseStrategyKind(s.at("kind").get<std::string>());
    m.strategy.random_fraction = s.at("random_fraction").get<double>();
    m.strategy.mined_fraction = s.at("mined_fraction").get<double>();
    m.strategy.target_concepts = s.at("target_concepts").get<std::set<std::string>>();
    m.strategy.seed = doc.at("seed").get<std::uint64_t>();
    m.selected_scenes = doc.at("scenes").get<std::vector<std::string>>();
    for (const auto& j : doc.at("explanations")) {
      SceneExplanation e;
      e.scene_id = j.at("scene_id").get<std::string>();
      e.reason = ParseSceneReason(j.at("reason").get<std::string>());
      e.evidence_total = j.at("evidence_total").get<std::size_t>();
      for (const auto& ev : j.at("evidence")) {
        EvidenceObject o;
        o.object_id = ev.at("object_id").get<std::string>();
        o.detector_class = ev.at("detector_class").get<std::string>();
        o.top_concept = ev.at("top_concept").get<std::string>();
        o.top_score = ev.at("top_score").get<double>();
        o.o_combined = ev.at("o_combined").get<std::uint8_t>();
        o.r_flag = ev.at("r_flag").get<std::uint8_t>();
        o.gate = ev.at("gate").get<std::string>();
        e.evidence.push_back(std::move(o));
      }
      m.explanations.push_back(std::move(e));
    }
    const auto& c = doc.at("counts");
    m.counts.total_scenes = c.at("total_scenes").get<std::size_t>();
    m.counts.random_quota = c.at("random_quota").get<std::size_t>();
    m.counts.mined_quota = c.at("mined_quota").get<std::size_t>();
    m.counts.mined_pool = c.at("mined_pool").get<std::size_t>();
    m.counts.mined_selected = c.at("mined_selected").get<std::size_t>();
    m.counts.random_selected = c.at("random_selected").get<std::size_t>();
    m.counts.selected = c.at("selected").get<std::size_t>();
    if (const auto it = doc.find("warnings"); it != doc.end()) {
      m.warnings = it->get<std::vector<std::string>>();
    }
  } catch (const json::exception& e) {
    throw Error(fmt::format("manifest: {}", e.what()));
  }
  return m;
}

NearTargetMap NearTargetMap::Default() {
  return NearTargetMap({{"truck", {"construction_vehicle", "truck", "trailer"}}});
}

std::set<std::string> NearTargetMap::Map(std::string_view detector_class) const {
  const auto it = mapping_.find(std::string(detector_class));
  if (it == mapping_.end()) return {std::string(detector_class)};
  return it->second;
}

bool NearTargetMap::Touches(std::string_view detector_class,
                            const std::set<std::string>& concepts) const {
  for (const auto& c : Map(detector_class)) {
    if (concepts.contains(c)) return true;
  }
  return false;
}

std::set<std::string> SelectTargetScenes(const SceneIndex& scenes,
                                         std::span<const ObjectAssessment> assessments,
                                         const std::set<std::string>& target_concepts,
                                         const std::set<std::string>& known_concepts,
                                         const ObjectPredicate& eligible) {
  for (const auto& t : target_concepts) {
    if (!known_concepts.contains(t)) {
      throw Error(fmt::format("unknown target concept '{}'", t));
    }
  }
  const auto index = IndexAssessments(assessments);
  std::set<std::string> out;
  for (const auto& [scene, ids] : scenes) {
    for (const auto& id : ids) {
      const auto& a = Lookup(index, id);
      if (target_concepts.contains(a.top_concept) && (!eligible || eligible(a))) {
        out.insert(scene);
        break;
      }
    }
  }
  return out;
}

std::set<std::string> SelectRareScenes(const SceneIndex& scenes,
                                       std::span<const ObjectAssessment> assessments) {
  const auto index = IndexAssessments(assessments);
  std::set<std::string> out;
  for (const auto& [scene, ids] : scenes) {
    for (const auto& id : ids) {
      if (Lookup(index, id).r_flag == 1) {
        out.insert(scene);
        break;
      }
    }
  }
  return out;
}

std::set<std::string> RandomSampleScenes(std::span<const std::string> all_scenes,
                                         double fraction, std::uint64_t seed,
                                         const std::set<std::string>& exclude) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw Error(fmt::format("random sample fraction {} outside [0, 1]", fraction));
  }
  auto sample = SampleRandom(all_scenes, QuotaOf(fraction, all_scenes.size()), seed, exclude);
  if (!sample.warning.empty()) log::Warn(sample.warning);
  return std::move(sample.scenes);
}

SelectionManifest BuildManifest(const SceneIndex& scenes,
                                std::span<const ObjectAssessment> assessments,
                                const StrategySpec& spec,
                                const NearTargetMap& near_target,
                                const std::set<std::string>& known_concepts) {
  spec.Validate();
  SelectionManifest m;
  m.strategy = spec;
  std::vector<std::string> all_scenes;
  all_scenes.reserve(scenes.size());
  for (const auto& [scene, ids] : scenes) all_scenes.push_back(scene);
  const std::size_t total = all_scenes.size();
  m.counts.total_scenes = total;

  const auto record_warning = [&](std::string w) {
    if (w.empty()) return;
    log::Warn(w);
    m.warnings.push_back(std::move(w));
  };

  std::set<std::string> mined;
  std::map<std::string, SceneExplanation> explained;

  if (spec.kind == StrategyKind::kRandom) {
    m.counts.random_quota = QuotaOf(spec.random_fraction + spec.mined_fraction, total);
  } else {
    m.counts.random_quota = QuotaOf(spec.random_fraction, total);
    m.counts.mined_quota = QuotaOf(spec.mined_fraction, total);
    const auto index = IndexAssessments(assessments);

    const bool plus = spec.kind == StrategyKind::kRandomTargetPlus;
    const auto gate_of = [&](const ObjectAssessment& a) -> std::string {
      if (a.o_combined > 0) return "outlier";
      if (plus && near_target.Touches(a.detector_class, spec.target_concepts)) {
        return "near_target";
      }
      return "";
    };
    const ObjectPredicate eligible = [&](const ObjectAssessment& a) {
      return !gate_of(a).empty();
    };

    std::set<std::string> pool;
    if (spec.kind == StrategyKind::kRandomRare) {
      pool = SelectRareScenes(scenes, assessments);
    } else {
      pool = SelectTargetScenes(scenes, assessments, spec.target_concepts,
                                known_concepts, eligible);
    }
    m.counts.mined_pool = pool.size();
    auto drawn = DrawFromPool(std::vector<std::string>(pool.begin(), pool.end()),
                              m.counts.mined_quota, DeriveSeed(spec.seed, "mined"),
                              std::string(StrategyKindName(spec.kind)) + " mined");
    record_warning(std::move(drawn.warning));
    mined = std::move(drawn.scenes);

    for (const auto& scene : mined) {
      SceneExplanation e;
      e.scene_id = scene;
      std::vector<const ObjectAssessment*> target_hits;
      std::vector<const ObjectAssessment*> rare_hits;
      for (const auto& id : scenes.at(scene)) {
        const auto& a = Lookup(index, id);
        if (spec.target_concepts.contains(a.top_concept) && eligible(a)) {
          target_hits.push_back(&a);
        }
        if (a.r_flag == 1) rare_hits.push_back(&a);
      }
      const auto& hits = target_hits.empty() ? rare_hits : target_hits;
      e.reason = target_hits.empty() ? SceneReason::kRareHit : SceneReason::kTargetHit;
      e.evidence_total = hits.size();
      for (std::size_t i = 0; i < hits.size() && i < SelectionManifest::kMaxEvidence; ++i) {
        const auto& a = *hits[i];
        std::string gate = gate_of(a);
        if (gate.empty()) gate = "outlier";
        e.evidence.push_back({a.object_id, a.detector_class, a.top_concept,
                              a.top_score, a.o_combined, a.r_flag, std::move(gate)});
      }
      explained.emplace(scene, std::move(e));
    }
  }
  m.counts.mined_selected = mined.size();

  auto random = SampleRandom(all_scenes, m.counts.random_quota,
                             DeriveSeed(spec.seed, "random"), mined);
  record_warning(std::move(random.warning));
  m.counts.random_selected = random.scenes.size();
  for (const auto& scene : random.scenes) {
    SceneExplanation e;
    e.scene_id = scene;
    e.reason = SceneReason::kRandom;
    explained.emplace(scene, std::move(e));
  }

  for (auto& [scene, e] : explained) {
    m.selected_scenes.push_back(scene);
    m.explanations.push_back(std::move(e));
  }
  m.counts.selected = m.selected_scenes.size();
  return m;
}

}  // namespace raremine
