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

#include "raremine/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "raremine/rng.h"

namespace raremine {
namespace {

double Round2(double v) { return std::round(v * 100.0) / 100.0; }

// Orthonormal directions from Gram-Schmidt on Gaussian draws; falls back to
// plain normalized draws once the dimension is exhausted.
std::vector<std::vector<double>> Directions(std::size_t count, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> out;
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.Normal();
    if (k < dim) {
      for (const auto& u : out) {
        const double dot = std::inner_product(v.begin(), v.end(), u.begin(), 0.0);
        for (std::size_t d = 0; d < dim; ++d) v[d] -= dot * u[d];
      }
    }
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    for (auto& x : v) x /= norm;
    out.push_back(std::move(v));
  }
  return out;
}

std::size_t Categorical(std::span<const double> cumulative, Rng& rng) {
  const double u = rng.Uniform01() * cumulative.back();
  for (std::size_t k = 0; k < cumulative.size(); ++k) {
    if (u < cumulative[k]) return k;
  }
  return cumulative.size() - 1;
}

std::string FirstMention(const SyntheticClass& c) {
  std::string name = c.name;
  std::replace(name.begin(), name.end(), '_', ' ');
  return name;
}

}  // namespace

SyntheticSpec LongTailSpec(std::size_t n_objects, std::size_t n_scenes,
                           std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_objects = n_objects;
  spec.n_scenes = n_scenes;
  spec.seed = seed;
  spec.classes = {
      {"car", "car", 493322.0, 6.0, {"sedan", "suv"},
       {"a parked car", "a silver sedan on the road", "a dark suv in traffic"}},
      {"pedestrian", "person", 208240.0, 6.0, {"person", "man", "woman"},
       {"a pedestrian crossing the street", "a man walking on the sidewalk",
        "a woman waiting at the crosswalk"}},
      {"construction_vehicle", "truck", 14671.0, 6.0, {"excavator", "crane"},
       {"a yellow construction vehicle", "an excavator at a road works site",
        "a mobile crane with its boom raised"}},
      {"bicycle", "bicycle", 11859.0, 12.0, {"bike", "cyclist"},
       {"a bicycle leaning on a post", "a cyclist riding a bike",
        "a parked bicycle with a basket"}},
  };
  spec.distractors = {
      {"truck", "truck", 0.0, 6.0, {"lorry"}, {}},
      {"trailer", "truck", 0.0, 6.0, {}, {}},
      {"traffic_cone", "traffic_cone", 0.0, 6.0, {"cone"}, {}},
  };
  spec.common = {"car", "pedestrian"};
  spec.target = {"bicycle"};
  return spec;
}

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticSpec& spec) {
  if (spec.classes.empty()) throw Error("synthetic: no classes");
  if (spec.n_scenes == 0 || spec.n_objects < spec.n_scenes) {
    throw Error(fmt::format("synthetic: {} objects cannot fill {} scenes", spec.n_objects,
                            spec.n_scenes));
  }
  if (spec.dim < 2) throw Error("synthetic: dim must be at least 2");
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& c : spec.classes) {
    if (!(c.weight > 0.0)) throw Error(fmt::format("synthetic: class {} needs a positive weight", c.name));
    total += c.weight;
    cumulative.push_back(total);
  }

  Rng dir_rng(DeriveSeed(spec.seed, "directions"));
  const std::size_t n_concepts = spec.classes.size() + spec.distractors.size();
  const auto dirs = Directions(n_concepts, spec.dim, dir_rng);

  std::vector<ConceptEntry> entries;
  for (std::size_t k = 0; k < n_concepts; ++k) {
    const auto& c = k < spec.classes.size() ? spec.classes[k]
                                            : spec.distractors[k - spec.classes.size()];
    entries.push_back({c.name, c.aliases, dirs[k]});
  }

  SyntheticCorpus out;
  out.vocabulary = ConceptVocabulary(
      std::move(entries), std::set<std::string>(spec.common.begin(), spec.common.end()),
      std::set<std::string>(spec.target.begin(), spec.target.end()));

  Rng class_rng(DeriveSeed(spec.seed, "classes"));
  Rng embed_rng(DeriveSeed(spec.seed, "embeddings"));
  Rng caption_rng(DeriveSeed(spec.seed, "captions"));
  Rng crop_rng(DeriveSeed(spec.seed, "crops"));

  const std::size_t n = spec.n_objects;
  const std::size_t d = spec.dim;
  const int id_width = static_cast<int>(fmt::format("{}", n - 1).size());
  const int scene_width = static_cast<int>(fmt::format("{}", spec.n_scenes - 1).size());
  std::vector<std::string> ids;
  std::vector<float> image;
  std::vector<float> caption_emb;
  std::vector<CaptionRecord> captions;
  image.reserve(n * d);

  const auto draw_point = [&](std::size_t k, std::vector<float>& dst) {
    const double scale = spec.classes[k].center_scale;
    for (std::size_t j = 0; j < d; ++j) {
      dst.push_back(static_cast<float>(scale * dirs[k][j] + spec.noise * embed_rng.Normal()));
    }
  };

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = Categorical(cumulative, class_rng);
    const auto& cls = spec.classes[k];
    std::size_t cluster = k;
    if (spec.classes.size() > 1 && class_rng.Uniform01() < spec.confusion) {
      cluster = (k + 1 + class_rng.UniformIndex(spec.classes.size() - 1)) %
                spec.classes.size();
    }
    const std::string id = fmt::format("obj-{:0{}d}", i, id_width);
    const std::size_t scene = i * spec.n_scenes / n;
    const std::string scene_id = fmt::format("scene-{:0{}d}", scene, scene_width);

    CropRecord crop;
    crop.object_id = id;
    crop.scene_id = scene_id;
    crop.image_id = fmt::format("{}-cam{}", scene_id, crop_rng.UniformIndex(6));
    crop.bbox = {Round2(crop_rng.Uniform(0.0, 1500.0)), Round2(crop_rng.Uniform(0.0, 800.0)),
                 Round2(crop_rng.Uniform(20.0, 300.0)), Round2(crop_rng.Uniform(20.0, 300.0))};
    crop.detector_class = cls.detector_class;
    crop.detector_confidence = Round2(crop_rng.Uniform(0.3, 1.0));
    out.bundle.crops.push_back(std::move(crop));

    draw_point(cluster, image);
    out.true_class.push_back(cls.name);
    ids.push_back(id);

    if (spec.with_captions) {
      std::string text = cls.captions.empty()
                             ? "a " + FirstMention(cls)
                             : cls.captions[caption_rng.UniformIndex(cls.captions.size())];
      std::vector<std::string> others;
      for (const auto& c : spec.common) {
        if (c != cls.name) others.push_back(c);
      }
      if (!others.empty() && caption_rng.Uniform01() < spec.co_mention) {
        std::string other = others[caption_rng.UniformIndex(others.size())];
        std::replace(other.begin(), other.end(), '_', ' ');
        text += " next to a " + other;
      }
      captions.push_back({id, std::move(text), i});
      draw_point(cluster, caption_emb);
    }
  }

  out.bundle.image_embeddings =
      EmbeddingMatrix(d, ids, std::move(image), EmbeddingKind::kImage, "synthetic-gaussian");
  if (spec.with_captions) {
    out.bundle.captions = std::move(captions);
    out.bundle.caption_embeddings = EmbeddingMatrix(
        d, ids, std::move(caption_emb), EmbeddingKind::kCaption, "synthetic-gaussian");
  }
  out.bundle.scenes = GroupByScene(out.bundle.crops);
  out.bundle.Reindex();
  return out;
}

void WriteSyntheticCorpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir) {
  WriteCropRecords(dir / "crops.jsonl", corpus.bundle.crops);
  WriteEmbeddingMatrix(corpus.bundle.image_embeddings, dir / "image_embeddings.bin",
                       dir / "image_embeddings.json");
  if (corpus.bundle.captions) {
    WriteCaptionRecords(dir / "captions.jsonl", *corpus.bundle.captions);
  }
  if (corpus.bundle.caption_embeddings) {
    WriteEmbeddingMatrix(*corpus.bundle.caption_embeddings, dir / "caption_embeddings.bin",
                         dir / "caption_embeddings.json");
  }
  WriteFile(dir / "vocabulary.json", corpus.vocabulary.Serialize());
}

}  // namespace raremine
