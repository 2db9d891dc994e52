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

// Seeded synthetic corpora: Gaussian class clusters in embedding space with
// long-tailed class frequencies, captions, and a matching concept vocabulary.

#ifndef RAREMINE_SYNTHETIC_H_
#define RAREMINE_SYNTHETIC_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "raremine/concepts.h"
#include "raremine/corpus.h"

namespace raremine {

struct SyntheticClass {
  // Concept name of the true class.
  std::string name;
  // Label the 2-D detector reports for this class.
  std::string detector_class;
  // Relative frequency; need not be normalized.
  double weight = 1.0;
  // Distance scale of the class centre from the origin.
  double center_scale = 3.0;
  std::vector<std::string> aliases;
  // Caption phrases; one is picked per object.
  std::vector<std::string> captions;
};

struct SyntheticSpec {
  std::size_t n_objects = 5000;
  std::size_t n_scenes = 500;
  std::size_t dim = 16;
  std::uint64_t seed = 0;
  std::vector<SyntheticClass> classes;
  // Concepts in the vocabulary that no object is drawn from.
  std::vector<SyntheticClass> distractors;
  std::vector<std::string> common;
  std::vector<std::string> target;
  // Per-coordinate standard deviation around a class centre.
  double noise = 1.0;
  // Probability that an object's embedding comes from another class's
  // cluster while its detector label and caption stay unchanged.
  double confusion = 0.02;
  // Probability that a caption also mentions a common concept.
  double co_mention = 0.15;
  bool with_captions = true;
};

// Four classes weighted by driving-dataset instance counts: car (493,322),
// pedestrian (208,240), construction_vehicle (14,671) and bicycle (11,859).
// bicycle is the target and sits twice as far from the origin as the common
// clusters; car and pedestrian are common. Detector labels follow a COCO
// style detector: pedestrian -> person, construction_vehicle -> truck.
SyntheticSpec LongTailSpec(std::size_t n_objects, std::size_t n_scenes,
                           std::uint64_t seed);

struct SyntheticCorpus {
  CorpusBundle bundle;
  ConceptVocabulary vocabulary;
  // True class per object, canonical order.
  std::vector<std::string> true_class;
};

// Object i lands in scene floor(i * n_scenes / n_objects), so every scene is
// populated when n_objects >= n_scenes. Throws Error on an inconsistent spec.
SyntheticCorpus GenerateSyntheticCorpus(const SyntheticSpec& spec);

// Writes crops.jsonl, image_embeddings.{bin,json}, captions.jsonl,
// caption_embeddings.{bin,json} and vocabulary.json into `dir`.
void WriteSyntheticCorpus(const SyntheticCorpus& corpus,
                          const std::filesystem::path& dir);

}  // namespace raremine

#endif  // RAREMINE_SYNTHETIC_H_
