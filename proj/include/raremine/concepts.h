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

// Concept vocabulary, weighted text/image similarity, and the concept-based
// gates applied to outlier candidates.
//
// Two mechanisms are kept apart on purpose:
//   * the Target/Rare/Common category of an object comes from its top concept
//     under embedding similarity;
//   * the concept set C_i tested by the rare filter comes from whole-word
//     matching of concept names and aliases in the caption text, falling back
//     to {top concept} for objects without a caption.

#ifndef RAREMINE_CONCEPTS_H_
#define RAREMINE_CONCEPTS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "raremine/common.h"

namespace raremine {

struct ConceptEntry {
  std::string name;
  std::vector<std::string> aliases;
  std::vector<double> embedding;
};

// Vocabulary file (JSON):
//   {"concepts": [{"name": ..., "aliases": [...], "embedding": [...]}, ...],
//    "common": [names], "target": [names]}
class ConceptVocabulary {
 public:
  ConceptVocabulary() = default;
  // Throws Error on duplicate names, empty or mismatched embedding dims, zero
  // embeddings, unknown names in common/target, or overlapping common/target.
  ConceptVocabulary(std::vector<ConceptEntry> entries,
                    std::set<std::string> common_set,
                    std::set<std::string> target_set);

  static ConceptVocabulary Parse(std::string_view json_text);
  static ConceptVocabulary Load(const std::filesystem::path& path);
  std::string Serialize() const;

  const std::vector<ConceptEntry>& entries() const { return entries_; }
  const std::set<std::string>& common_set() const { return common_; }
  const std::set<std::string>& target_set() const { return target_; }
  std::size_t dim() const { return dim_; }
  std::set<std::string> names() const;

  bool Contains(std::string_view name) const;
  bool IsCommon(std::string_view name) const { return common_.contains(std::string(name)); }
  bool IsTarget(std::string_view name) const { return target_.contains(std::string(name)); }

 private:
  std::vector<ConceptEntry> entries_;
  std::set<std::string> common_;
  std::set<std::string> target_;
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::size_t> index_;
};

// Modality weights, normalized to sum to 1 on construction.
class SimilarityWeights {
 public:
  SimilarityWeights() = default;
  // Throws Error when either weight is negative or both are zero.
  SimilarityWeights(double text_weight, double image_weight);

  double text() const { return text_; }
  double image() const { return image_; }

 private:
  double text_ = 0.5;
  double image_ = 0.5;
};

enum class Category { kTarget, kRare, kCommon };

std::string_view CategoryName(Category category);
Category ParseCategory(std::string_view name);

struct ScoredConcept {
  std::string name;
  double score = 0.0;

  friend bool operator==(const ScoredConcept&, const ScoredConcept&) = default;
};

// Descending by score; equal scores ordered by name.
using ConceptRanking = std::vector<ScoredConcept>;

// a.b / (|a| |b|). Throws Error on dim mismatch or a zero vector.
double CosineSimilarity(std::span<const double> a, std::span<const double> b);

// score = w_text cos(caption, concept) + w_image cos(image, concept). With one
// modality absent the other carries weight 1. Throws Error when both are
// absent.
ConceptRanking ConceptSimilarities(std::optional<std::span<const double>> image,
                                   std::optional<std::span<const double>> caption,
                                   const ConceptVocabulary& vocab,
                                   const SimilarityWeights& weights);

// Throws Error on an empty ranking.
const std::string& TopConcept(const ConceptRanking& ranked);

// Target if top is a target concept, else Common if common, else Rare.
// Throws Error when top is not in the vocabulary.
Category ClassifyObject(std::string_view top, const ConceptVocabulary& vocab);

// R_i = 1 iff O_i > 0 and C_i shares no element with the common classes.
std::uint8_t RareFilter(std::uint8_t o_combined,
                        const std::set<std::string>& concepts,
                        const std::set<std::string>& common_set);

// Concepts whose name or alias occurs as a case-insensitive whole word or
// phrase in the caption. Underscores in names also match spaces, so
// "traffic_cone" matches "traffic cone".
std::set<std::string> ParseConcepts(std::string_view caption_text,
                                    const ConceptVocabulary& vocab);

struct ConceptAssessment {
  std::string object_id;
  ConceptRanking ranked;
  std::string top_concept;
  Category category = Category::kRare;
  // C_i used by the rare filter.
  std::set<std::string> concepts;
  std::uint8_t rare_flag = 0;
};

}  // namespace raremine

#endif  // RAREMINE_CONCEPTS_H_
