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

#include "raremine/assessment.h"

#include <fmt/format.h>

#include "raremine/parallel.h"

namespace raremine {

ConceptAssessment AssessConcepts(std::string_view object_id,
                                 std::span<const double> image_embedding,
                                 std::optional<std::span<const double>> caption_embedding,
                                 std::optional<std::string_view> caption_text,
                                 std::uint8_t o_combined,
                                 const ConceptVocabulary& vocab,
                                 const SimilarityWeights& weights) {
  ConceptAssessment a;
  a.object_id = std::string(object_id);
  a.ranked = ConceptSimilarities(image_embedding, caption_embedding, vocab, weights);
  a.top_concept = TopConcept(a.ranked);
  a.category = ClassifyObject(a.top_concept, vocab);
  a.concepts = caption_text ? ParseConcepts(*caption_text, vocab)
                            : std::set<std::string>{a.top_concept};
  a.rare_flag = RareFilter(o_combined, a.concepts, vocab.common_set());
  return a;
}

std::vector<ObjectAssessment> AssessCorpus(const CorpusBundle& corpus,
                                           std::span<const OutlierRecord> outliers,
                                           const ConceptVocabulary& vocab,
                                           const SimilarityWeights& weights,
                                           int workers) {
  const auto& emb = corpus.image_embeddings;
  if (outliers.size() != emb.rows()) {
    throw Error(fmt::format("assessment: {} outlier rows for {} objects",
                            outliers.size(), emb.rows()));
  }
  if (emb.rows() > 0 && vocab.dim() != emb.dim()) {
    throw Error(fmt::format("assessment: vocabulary dim {} differs from embedding dim {}",
                            vocab.dim(), emb.dim()));
  }
  std::vector<ObjectAssessment> out(emb.rows());
  ParallelFor(
      emb.rows(),
      [&](std::size_t i) {
        const auto& id = emb.row_ids()[i];
        const auto& o = outliers[i];
        if (o.object_id != id) {
          throw Error(fmt::format("assessment: outlier row {} is {}, expected {}",
                                  i, o.object_id, id));
        }
        const auto image = emb.RowAsDouble(i);
        std::vector<double> caption_vec;
        std::optional<std::span<const double>> caption_emb;
        std::optional<std::string_view> caption_text;
        if (const auto* cap = corpus.CaptionFor(id)) {
          caption_text = cap->caption_text;
          if (cap->caption_embedding_row && corpus.caption_embeddings) {
            caption_vec = corpus.caption_embeddings->RowAsDouble(*cap->caption_embedding_row);
            caption_emb = std::span<const double>(caption_vec);
          }
        }
        auto ca = AssessConcepts(id, image, caption_emb, caption_text, o.o_combined,
                                 vocab, weights);
        auto& a = out[i];
        a.object_id = id;
        if (const auto* crop = corpus.CropFor(id)) {
          a.scene_id = crop->scene_id;
          a.detector_class = crop->detector_class;
        }
        a.if_score = o.if_score;
        a.o_if = o.o_if;
        a.d_knn = o.d_knn;
        a.o_tsne = o.o_tsne;
        a.o_combined = o.o_combined;
        a.top_concept = ca.top_concept;
        a.top_score = ca.ranked.front().score;
        a.category = ca.category;
        a.concepts = std::move(ca.concepts);
        a.r_flag = ca.rare_flag;
        a.ranked = std::move(ca.ranked);
      },
      workers > 0 ? workers : WorkerCount());
  return out;
}

}  // namespace raremine
