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

// Per-object mining verdicts: outlier scores and flags joined with the
// concept assessment.

#ifndef RAREMINE_ASSESSMENT_H_
#define RAREMINE_ASSESSMENT_H_

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "raremine/concepts.h"
#include "raremine/corpus.h"

namespace raremine {

// One row of the outlier table, in canonical object order.
struct OutlierRecord {
  std::string object_id;
  double d_knn = 0.0;
  std::uint8_t o_tsne = 0;
  double if_score = 0.0;
  std::uint8_t o_if = 0;
  std::uint8_t o_combined = 0;

  friend bool operator==(const OutlierRecord&, const OutlierRecord&) = default;
};

struct ObjectAssessment {
  std::string object_id;
  std::string scene_id;
  std::string detector_class;
  double if_score = 0.0;
  std::uint8_t o_if = 0;
  double d_knn = 0.0;
  std::uint8_t o_tsne = 0;
  std::uint8_t o_combined = 0;
  ConceptRanking ranked;
  std::string top_concept;
  double top_score = 0.0;
  Category category = Category::kRare;
  std::set<std::string> concepts;
  std::uint8_t r_flag = 0;
};

// Concept assessment of a single object. `caption_text` absent means the
// object has no caption, in which case C_i = {top concept}.
ConceptAssessment AssessConcepts(std::string_view object_id,
                                 std::span<const double> image_embedding,
                                 std::optional<std::span<const double>> caption_embedding,
                                 std::optional<std::string_view> caption_text,
                                 std::uint8_t o_combined,
                                 const ConceptVocabulary& vocab,
                                 const SimilarityWeights& weights);

// Assesses every object of the corpus in canonical order. `outliers` must be
// aligned with corpus.image_embeddings rows. Throws Error on misalignment or
// on a vocabulary whose dim differs from the embeddings.
std::vector<ObjectAssessment> AssessCorpus(const CorpusBundle& corpus,
                                           std::span<const OutlierRecord> outliers,
                                           const ConceptVocabulary& vocab,
                                           const SimilarityWeights& weights,
                                           int workers = -1);

}  // namespace raremine

#endif  // RAREMINE_ASSESSMENT_H_
