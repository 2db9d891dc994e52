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

// raremine-synth: writes a seeded long-tail synthetic corpus and a run
// configuration that points at it.
//
//   raremine-synth --out DIR [--objects 300] [--scenes 30] [--dim 8]
//                  [--seed 0] [--targets bicycle,construction_vehicle]

#include <cstdint>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "raremine/corpus.h"
#include "raremine/synthetic.h"

int main(int argc, char** argv) {
  std::string out;
  std::size_t objects = 300;
  std::size_t scenes = 30;
  std::size_t dim = 8;
  std::uint64_t seed = 0;
  std::vector<std::string> targets;
  std::size_t tsne_iters = 1000;

  CLI::App app{"Synthetic long-tail corpus generator"};
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--objects", objects, "Object count")->check(CLI::PositiveNumber);
  app.add_option("--scenes", scenes, "Scene count")->check(CLI::PositiveNumber);
  app.add_option("--dim", dim, "Embedding dimension")->check(CLI::Range(2, 4096));
  app.add_option("--seed", seed, "Generator and run seed");
  app.add_option("--targets", targets, "Strategy target concepts")->delimiter(',');
  app.add_option("--tsne-iters", tsne_iters, "t-SNE iterations in the config");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto spec = raremine::LongTailSpec(objects, scenes, seed);
    spec.dim = dim;
    const auto corpus = raremine::GenerateSyntheticCorpus(spec);
    raremine::WriteSyntheticCorpus(corpus, out);
    if (targets.empty()) targets = spec.target;

    nlohmann::ordered_json config;
    config["corpus"] = {{"crops", "crops.jsonl"},
                        {"image_embeddings", "image_embeddings.bin"},
                        {"image_sidecar", "image_embeddings.json"},
                        {"captions", "captions.jsonl"},
                        {"caption_embeddings", "caption_embeddings.bin"},
                        {"caption_sidecar", "caption_embeddings.json"}};
    config["vocabulary"] = "vocabulary.json";
    config["output_dir"] = "out";
    config["seed"] = seed;
    config["iforest"] = {{"n_trees", 100}, {"subsample_size", 256}, {"contamination", 0.2}};
    config["tsne"] = {{"perplexity", 30.0}, {"n_iters", tsne_iters}};
    config["knn"] = {{"k", 10}, {"mode", "quantile"}, {"quantile", 0.8}};
    config["similarity"] = {{"text_weight", 0.5}, {"image_weight", 0.5}};
    config["strategy"] = {{"kind", "random_target"},
                          {"random_fraction", 0.1},
                          {"mined_fraction", 0.1},
                          {"target_concepts", targets}};
    config["near_target"] = {{"truck", {"construction_vehicle", "truck", "trailer"}}};
    raremine::WriteFile(std::filesystem::path(out) / "config.json", config.dump(2) + "\n");
    fmt::print("wrote {} objects in {} scenes to {}\n", objects, scenes, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
