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

// Deterministic SVG figures and plain-text scene explanations.
//
// Every coordinate and score is printed with four decimals and elements are
// emitted in a fixed order, so identical inputs give byte-identical files.

#ifndef RAREMINE_REPORT_H_
#define RAREMINE_REPORT_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raremine/assessment.h"
#include "raremine/concepts.h"
#include "raremine/corpus.h"
#include "raremine/selection.h"
#include "raremine/tsne.h"

namespace raremine {

enum class ColorKey { kCategory, kOIf, kOTsne, kOCombined };

std::string_view ColorKeyName(ColorKey key);
// Throws ConfigError on unknown names.
ColorKey ParseColorKey(std::string_view name);

struct PaletteSlot {
  std::string color;
  std::string label;
};

inline constexpr std::string_view kInlierBlue = "#1f77b4";
inline constexpr std::string_view kOutlierRed = "#d62728";

struct ScatterSpec {
  // N x 2 layout coordinates.
  Matrix points;
  // Palette slot of each point.
  std::vector<std::size_t> slots;
  std::vector<PaletteSlot> palette;
  double point_radius = 2.5;
  int width = 800;
  int height = 800;
  std::string title;
};

// Fraction of the canvas left blank on every side.
inline constexpr double kCanvasMargin = 0.05;

// Binary flags: slot 0 = inlier (blue), slot 1 = flagged (red).
ScatterSpec FlagScatter(const Matrix& points, std::span<const std::uint8_t> flags);

// Colors the layout by one assessment field. Throws Error when the layout ids
// and the assessments are not aligned.
//   o_if, o_tsne   inlier blue, flagged red
//   o_combined     0 blue, 1 light red, 2 red, 3 dark red
//   category       common blue, rare orange, target red
ScatterSpec AssessmentScatter(const Layout2D& layout,
                              std::span<const ObjectAssessment> assessments,
                              ColorKey key);

// One circle per point. Points are drawn by ascending palette slot, so
// inliers come first and outliers land on top; within a slot, corpus order.
// Throws Error on an empty layout, a bad canvas, or a slot outside the
// palette.
std::string RenderScatter(const ScatterSpec& spec);

struct BarChartSpec {
  ConceptRanking ranking;
  std::size_t top_m = 10;
  int width = 640;
  std::string title;
};

// Horizontal bars for the first top_m concepts of the ranking, widths
// proportional to the score on [0, 1]. Scores outside the axis are clamped
// for drawing; the printed annotation keeps the raw value. Throws Error on an
// empty ranking or top_m == 0.
std::string RenderConceptBars(const BarChartSpec& spec);

// Plain-text account of why a scene is in the manifest. Random scenes get no
// evidence section. Throws Error when the scene is not in the manifest.
std::string ExplainScene(const SelectionManifest& manifest, const SceneIndex& scenes,
                         std::span<const ObjectAssessment> assessments,
                         std::string_view scene_id);

// Plain-text account of one object's assessment. Throws Error on unknown ids.
std::string ExplainObject(std::span<const ObjectAssessment> assessments,
                          std::string_view object_id, std::size_t top_m = 10);

std::string XmlEscape(std::string_view text);

}  // namespace raremine

#endif  // RAREMINE_REPORT_H_
