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

#include "raremine/concepts.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "json.hpp"
#include "raremine/corpus.h"

namespace raremine {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool IsWordChar(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}

bool ContainsWholeWord(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return false;
  std::size_t pos = haystack.find(needle);
  while (pos != std::string_view::npos) {
    const bool left_ok = pos == 0 || !IsWordChar(haystack[pos - 1]);
    const std::size_t end = pos + needle.size();
    const bool right_ok = end == haystack.size() || !IsWordChar(haystack[end]);
    if (left_ok && right_ok) return true;
    pos = haystack.find(needle, pos + 1);
  }
  return false;
}

double Norm(std::span<const double> v) {
  double s = 0.0;
  for (const double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

ConceptVocabulary::ConceptVocabulary(std::vector<ConceptEntry> entries,
                                     std::set<std::string> common_set,
                                     std::set<std::string> target_set)
    : entries_(std::move(entries)),
      common_(std::move(common_set)),
      target_(std::move(target_set)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (e.name.empty()) throw Error("vocabulary: empty concept name");
    if (!index_.emplace(e.name, i).second) {
      throw Error(fmt::format("vocabulary: duplicate concept '{}'", e.name));
    }
    if (e.embedding.empty()) {
      throw Error(fmt::format("vocabulary: concept '{}' has no embedding", e.name));
    }
    if (i == 0) dim_ = e.embedding.size();
    if (e.embedding.size() != dim_) {
      throw Error(fmt::format("vocabulary: concept '{}' has dim {}, expected {}",
                              e.name, e.embedding.size(), dim_));
    }
    if (!(Norm(e.embedding) > 0.0)) {
      throw Error(fmt::format("vocabulary: concept '{}' has a zero embedding", e.name));
    }
  }
  for (const auto& n : common_) {
    if (!index_.contains(n)) throw Error(fmt::format("vocabulary: unknown common concept '{}'", n));
  }
  for (const auto& n : target_) {
    if (!index_.contains(n)) throw Error(fmt::format("vocabulary: unknown target concept '{}'", n));
    if (common_.contains(n)) {
      throw Error(fmt::format("vocabulary: '{}' is both common and target", n));
    }
  }
}

ConceptVocabulary ConceptVocabulary::Parse(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(fmt::format("vocabulary: malformed JSON: {}", e.what()));
  }
  try {
    std::vector<ConceptEntry> entries;
    for (const auto& c : doc.at("concepts")) {
      ConceptEntry e;
      e.name = c.at("name").get<std::string>();
      if (const auto it = c.find("aliases"); it != c.end()) {
        e.aliases = it->get<std::vector<std::string>>();
      }
      e.embedding = c.at("embedding").get<std::vector<double>>();
      entries.push_back(std::move(e));
    }
    std::set<std::string> common;
    std::set<std::string> target;
    if (const auto it = doc.find("common"); it != doc.end()) {
      common = it->get<std::set<std::string>>();
    }
    if (const auto it = doc.find("target"); it != doc.end()) {
      target = it->get<std::set<std::string>>();
    }
    return ConceptVocabulary(std::move(entries), std::move(common), std::move(target));
  } catch (const json::exception& e) {
    throw Error(fmt::format("vocabulary: {}", e.what()));
  }
}

ConceptVocabulary ConceptVocabulary::Load(const std::filesystem::path& path) {
  try {
    return Parse(ReadFile(path));
  } catch (const Error& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

std::string ConceptVocabulary::Serialize() const {
  ordered_json doc;
  doc["concepts"] = ordered_json::array();
  for (const auto& e : entries_) {
    ordered_json c;
    c["name"] = e.name;
    c["aliases"] = e.aliases;
    c["embedding"] = e.embedding;
    doc["concepts"].push_back(std::move(c));
  }
  doc["common"] = common_;
  doc["target"] = target_;
  return doc.dump(2) + "\n";
}

std::set<std::string> ConceptVocabulary::names() const {
  std::set<std::string> out;
  for (const auto& e : entries_) out.insert(e.name);
  return out;
}

bool ConceptVocabulary::Contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

SimilarityWeights::SimilarityWeights(double text_weight, double image_weight) {
  if (!(text_weight >= 0.0) || !(image_weight >= 0.0)) {
    throw Error("similarity weights must be non-negative");
  }
  const double sum = text_weight + image_weight;
  if (!(sum > 0.0)) throw Error("similarity weights must not both be zero");
  text_ = text_weight / sum;
  image_ = image_weight / sum;
}

std::string_view CategoryName(Category category) {
  switch (category) {
    case Category::kTarget:
      return "target";
    case Category::kRare:
      return "rare";
    case Category::kCommon:
      return "common";
  }
  return "rare";
}

Category ParseCategory(std::string_view name) {
  if (name == "target") return Category::kTarget;
  if (name == "rare") return Category::kRare;
  if (name == "common") return Category::kCommon;
  throw Error(fmt::format("unknown category '{}'", name));
}

double CosineSimilarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(fmt::format("cosine: dims differ ({} vs {})", a.size(), b.size()));
  }
  double dot = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) dot += a[i] * b[i];
  const double na = Norm(a);
  const double nb = Norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw Error("cosine: zero vector");
  return std::clamp(dot / (na * nb), -1.0, 1.0);
}

ConceptRanking ConceptSimilarities(std::optional<std::span<const double>> image,
                                   std::optional<std::span<const double>> caption,
                                   const ConceptVocabulary& vocab,
                                   const SimilarityWeights& weights) {
  if (!image && !caption) {
    throw Error("concept similarity needs an image or caption embedding");
  }
  double w_image = weights.image();
  double w_text = weights.text();
  if (!caption) {
    w_image = 1.0;
    w_text = 0.0;
  } else if (!image) {
    w_image = 0.0;
    w_text = 1.0;
  }
  ConceptRanking ranked;
  ranked.reserve(vocab.entries().size());
  for (const auto& e : vocab.entries()) {
    double score = 0.0;
    if (caption && w_text > 0.0) score += w_text * CosineSimilarity(*caption, e.embedding);
    if (image && w_image > 0.0) score += w_image * CosineSimilarity(*image, e.embedding);
    ranked.push_back({e.name, score});
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.name < b.name;
  });
  return ranked;
}

const std::string& TopConcept(const ConceptRanking& ranked) {
  if (ranked.empty()) throw Error("top concept of an empty ranking");
  return ranked.front().name;
}

Category ClassifyObject(std::string_view top, const ConceptVocabulary& vocab) {
  if (!vocab.Contains(top)) throw Error(fmt::format("unknown concept '{}'", top));
  if (vocab.IsTarget(top)) return Category::kTarget;
  if (vocab.IsCommon(top)) return Category::kCommon;
  return Category::kRare;
}

std::uint8_t RareFilter(std::uint8_t o_combined,
                        const std::set<std::string>& concepts,
                        const std::set<std::string>& common_set) {
  if (o_combined == 0) return 0;
  for (const auto& c : concepts) {
    if (common_set.contains(c)) return 0;
  }
  return 1;
}

std::set<std::string> ParseConcepts(std::string_view caption_text,
                                    const ConceptVocabulary& vocab) {
  std::set<std::string> found;
  const std::string text = Lower(caption_text);
  if (text.empty()) return found;
  for (const auto& e : vocab.entries()) {
    std::vector<std::string> needles{e.name};
    needles.insert(needles.end(), e.aliases.begin(), e.aliases.end());
    for (const auto& raw : needles) {
      const std::string needle = Lower(raw);
      std::string spaced = needle;
      std::replace(spaced.begin(), spaced.end(), '_', ' ');
      if (ContainsWholeWord(text, needle) ||
          (spaced != needle && ContainsWholeWord(text, spaced))) {
        found.insert(e.name);
        break;
      }
    }
  }
  return found;
}

}  // namespace raremine
