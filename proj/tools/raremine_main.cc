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

// raremine: command-line front end of the mining pipeline.
//
//   raremine --config run.json validate
//   raremine --config run.json mine [--no-cache]
//   raremine --config run.json select [--strategy random_target]
//   raremine --config run.json plot scatter [--color o_combined]
//   raremine --config run.json plot bars --object ID
//   raremine --config run.json explain --scene ID | --object ID
//
// Exit status: 0 success, 1 domain violation, 2 usage or config error.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <fmt/format.h>

#include "CLI11.hpp"
#include "raremine/common.h"
#include "raremine/pipeline.h"

namespace {

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool no_cache = false;
  std::optional<std::string> strategy;
  std::string plot_kind;
  std::string color = "o_combined";
  std::optional<std::string> object;
  std::optional<std::string> scene;
  std::size_t top = 10;
};

raremine::RunConfig LoadConfig(const Options& opt) {
  auto config = raremine::LoadRunConfig(opt.config);
  if (opt.seed) config.SetSeed(*opt.seed);
  if (opt.out) config.output_dir = *opt.out;
  if (opt.strategy) {
    config.strategy.kind = raremine::ParseStrategyKind(*opt.strategy);
    config.strategy.Validate();
  }
  return config;
}

int Validate(const Options& opt) {
  const auto config = LoadConfig(opt);
  const auto report = raremine::RunValidate(config);
  if (report.valid()) {
    fmt::print("corpus valid\n");
    return kOk;
  }
  for (const auto& v : report.violations) fmt::print("violation: {}\n", v);
  fmt::print("{} violation(s)\n", report.violations.size());
  return kDomainError;
}

int Mine(const Options& opt) {
  const auto config = LoadConfig(opt);
  const auto summary = raremine::RunMine(config, !opt.no_cache);
  for (const auto& s : summary.stages) {
    fmt::print("{:<12} {}\n", s.stage, s.cached ? "cached" : "computed");
  }
  fmt::print("objects {}  o_if {}  o_tsne {}  outliers {}  rare {}  target {}\n",
             summary.objects, summary.o_if, summary.o_tsne, summary.outliers, summary.rare,
             summary.target);
  return kOk;
}

int Select(const Options& opt) {
  const auto config = LoadConfig(opt);
  const auto m = raremine::RunSelect(config);
  const auto& c = m.counts;
  fmt::print("strategy {}  scenes {}  random quota {}  mined quota {}\n",
             raremine::StrategyKindName(m.strategy.kind), c.total_scenes, c.random_quota,
             c.mined_quota);
  fmt::print("mined pool {}  mined {}  random {}  selected {}\n", c.mined_pool,
             c.mined_selected, c.random_selected, c.selected);
  fmt::print("manifest {}\n",
             (config.output_dir / raremine::output_files::kManifest).string());
  return kOk;
}

int Plot(const Options& opt) {
  const auto config = LoadConfig(opt);
  if (opt.plot_kind == "scatter") {
    const auto path = raremine::RunPlotScatter(config, raremine::ParseColorKey(opt.color));
    fmt::print("{}\n", path.string());
    return kOk;
  }
  if (!opt.object) throw raremine::ConfigError("plot bars needs --object");
  const auto path = raremine::RunPlotBars(config, *opt.object, opt.top);
  fmt::print("{}\n", path.string());
  return kOk;
}

int Explain(const Options& opt) {
  const auto config = LoadConfig(opt);
  if (opt.scene.has_value() == opt.object.has_value()) {
    throw raremine::ConfigError("explain needs exactly one of --scene or --object");
  }
  const auto text = opt.scene ? raremine::RunExplainScene(config, *opt.scene)
                              : raremine::RunExplainObject(config, *opt.object);
  fmt::print("{}", text);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  CLI::App app{"Concept-based rare-object mining over embedding corpora"};
  app.require_subcommand(1);
  app.add_option("--config", opt.config, "Run configuration (JSON)")->required();
  app.add_option("--seed", opt.seed, "Global seed; overrides the config");
  app.add_option("--out", opt.out, "Output directory; overrides the config");

  auto* validate = app.add_subcommand("validate", "Check corpus alignment");
  auto* mine = app.add_subcommand("mine", "Run the outlier and concept stages");
  mine->add_flag("--no-cache", opt.no_cache, "Recompute every stage");
  auto* select = app.add_subcommand("select", "Write the selection manifest");
  select->add_option("--strategy", opt.strategy,
                     "random, random_rare, random_target or random_target_plus");
  auto* plot = app.add_subcommand("plot", "Render SVG figures");
  plot->add_option("kind", opt.plot_kind, "scatter or bars")
      ->required()
      ->check(CLI::IsMember({"scatter", "bars"}));
  plot->add_option("--color", opt.color, "category, o_if, o_tsne or o_combined");
  plot->add_option("--object", opt.object, "Object for the concept bar chart");
  plot->add_option("--top", opt.top, "Bars to draw")->check(CLI::PositiveNumber);
  auto* explain = app.add_subcommand("explain", "Explain a selected scene or an object");
  explain->add_option("--scene", opt.scene, "Scene id from the manifest");
  explain->add_option("--object", opt.object, "Object id");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    if (*validate) return Validate(opt);
    if (*mine) return Mine(opt);
    if (*select) return Select(opt);
    if (*plot) return Plot(opt);
    if (*explain) return Explain(opt);
  } catch (const raremine::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}
