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

#include "raremine/report.h"

#include <algorithm>
#include <unordered_map>

#include <fmt/format.h>

#include "raremine/outliers.h"

namespace raremine {
namespace {

std::string Fixed(double v) {
  // Avoids printing "-0.0000" for tiny negatives.
  std::string s = fmt::format("{:.4f}", v);
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string SvgOpen(int width, int height) {
  return fmt::format(
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{0}\" "
      "height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n"
      "<rect x=\"0\" y=\"0\" width=\"{0}\" height=\"{1}\" fill=\"#ffffff\"/>\n",
      width, height);
}

// Maps [lo, hi] onto [out_lo, out_hi]; a degenerate range maps to the centre.
double Affine(double v, double lo, double hi, double out_lo, double out_hi) {
  if (!(hi > lo)) return 0.5 * (out_lo + out_hi);
  return out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo);
}

std::string_view StrategyClause(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kRandom:
      return "pure random budget";
    case StrategyKind::kRandomRare:
      return "mined pool: scenes with an object flagged as outlier (O > 0) whose "
             "concepts avoid every common class (R = 1)";
    case StrategyKind::kRandomTarget:
      return "mined pool: scenes with an outlier (O > 0) whose top concept is a "
             "target concept";
    case StrategyKind::kRandomTargetPlus:
      return "mined pool: scenes with an object whose top concept is a target "
             "concept and that is an outlier (O > 0) or carries a near-target "
             "detector class";
  }
  return "";
}

std::unordered_map<std::string, const ObjectAssessment*> Index(
    std::span<const ObjectAssessment> assessments) {
  std::unordered_map<std::string, const ObjectAssessment*> index;
  for (const auto& a : assessments) index.emplace(a.object_id, &a);
  return index;
}

}  // namespace

std::string XmlEscape(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      case '\'':
        out += "&apos;";
        break;
      default:
        out.push_back(c);
    }
  }
  return out;
}

std::string_view ColorKeyName(ColorKey key) {
  switch (key) {
    case ColorKey::kCategory:
      return "category";
    case ColorKey::kOIf:
      return "o_if";
    case ColorKey::kOTsne:
      return "o_tsne";
    case ColorKey::kOCombined:
      return "o_combined";
  }
  return "category";
}

ColorKey ParseColorKey(std::string_view name) {
  if (name == "category") return ColorKey::kCategory;
  if (name == "o_if") return ColorKey::kOIf;
  if (name == "o_tsne") return ColorKey::kOTsne;
  if (name == "o_combined") return ColorKey::kOCombined;
  throw ConfigError(fmt::format(
      "unknown color key '{}' (use category, o_if, o_tsne or o_combined)", name));
}

ScatterSpec FlagScatter(const Matrix& points, std::span<const std::uint8_t> flags) {
  if (flags.size() != points.rows()) {
    throw Error(fmt::format("scatter: {} flags for {} points", flags.size(),
                            points.rows()));
  }
  ScatterSpec spec;
  spec.points = points;
  spec.palette = {{std::string(kInlierBlue), "inlier"},
                  {std::string(kOutlierRed), "outlier"}};
  for (const auto f : flags) spec.slots.push_back(f ? 1 : 0);
  return spec;
}

ScatterSpec AssessmentScatter(const Layout2D& layout,
                              std::span<const ObjectAssessment> assessments,
                              ColorKey key) {
  if (layout.row_ids.size() != assessments.size()) {
    throw Error(fmt::format("scatter: layout has {} rows, assessments {}",
                            layout.row_ids.size(), assessments.size()));
  }
  for (std::size_t i = 0; i < assessments.size(); ++i) {
    if (layout.row_ids[i] != assessments[i].object_id) {
      throw Error(fmt::format("scatter: row {} is {} in the layout but {} in the "
                              "assessments",
                              i, layout.row_ids[i], assessments[i].object_id));
    }
  }
  ScatterSpec spec;
  spec.points = layout.y;
  spec.title = fmt::format("t-SNE layout colored by {}", ColorKeyName(key));
  switch (key) {
    case ColorKey::kOIf:
    case ColorKey::kOTsne: {
      FlagVector flags;
      for (const auto& a : assessments) {
        flags.push_back(key == ColorKey::kOIf ? a.o_if : a.o_tsne);
      }
      auto flagged = FlagScatter(layout.y, flags);
      flagged.title = spec.title;
      return flagged;
    }
    case ColorKey::kOCombined:
      spec.palette = {{std::string(kInlierBlue), "O=0 inlier"},
                      {"#fb6a4a", "O=1 isolation forest"},
                      {"#ef3b2c", "O=2 t-SNE kNN"},
                      {"#a50f15", "O=3 both"}};
      for (const auto& a : assessments) spec.slots.push_back(a.o_combined);
      break;
    case ColorKey::kCategory:
      spec.palette = {{std::string(kInlierBlue), "common"},
                      {"#ff7f0e", "rare"},
                      {std::string(kOutlierRed), "target"}};
      for (const auto& a : assessments) {
        spec.slots.push_back(a.category == Category::kCommon ? 0
                             : a.category == Category::kRare ? 1
                                                             : 2);
      }
      break;
  }
  return spec;
}

std::string RenderScatter(const ScatterSpec& spec) {
  const Matrix& p = spec.points;
  if (p.rows() == 0) throw Error("scatter: empty layout");
  if (p.cols() != 2) throw Error("scatter: layout must have two columns");
  if (spec.width <= 0 || spec.height <= 0) throw Error("scatter: canvas must be positive");
  if (spec.slots.size() != p.rows()) {
    throw Error(fmt::format("scatter: {} slots for {} points", spec.slots.size(),
                            p.rows()));
  }
  for (const auto s : spec.slots) {
    if (s >= spec.palette.size()) {
      throw Error(fmt::format("scatter: slot {} outside a palette of {}", s,
                              spec.palette.size()));
    }
  }
  double x_lo = p(0, 0), x_hi = p(0, 0), y_lo = p(0, 1), y_hi = p(0, 1);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    x_lo = std::min(x_lo, p(i, 0));
    x_hi = std::max(x_hi, p(i, 0));
    y_lo = std::min(y_lo, p(i, 1));
    y_hi = std::max(y_hi, p(i, 1));
  }
  const double mx = kCanvasMargin * spec.width;
  const double my = kCanvasMargin * spec.height;

  std::string out = SvgOpen(spec.width, spec.height);
  if (!spec.title.empty()) {
    out += fmt::format("<title>{}</title>\n", XmlEscape(spec.title));
  }
  std::vector<std::size_t> order(p.rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return spec.slots[a] < spec.slots[b];
  });
  const std::string r = Fixed(spec.point_radius);
  out += "<g id=\"points\">\n";
  for (const auto i : order) {
    const double cx = Affine(p(i, 0), x_lo, x_hi, mx, spec.width - mx);
    const double cy = Affine(p(i, 1), y_lo, y_hi, spec.height - my, my);
    out += fmt::format("<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"{}\"/>\n", Fixed(cx),
                       Fixed(cy), r, spec.palette[spec.slots[i]].color);
  }
  out += "</g>\n<g id=\"legend\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t s = 0; s < spec.palette.size(); ++s) {
    const double y = 14.0 + 14.0 * static_cast<double>(s);
    out += fmt::format(
        "<rect x=\"6.0000\" y=\"{}\" width=\"9.0000\" height=\"9.0000\" fill=\"{}\"/>"
        "<text x=\"20.0000\" y=\"{}\">{}</text>\n",
        Fixed(y - 8.0), spec.palette[s].color, Fixed(y), XmlEscape(spec.palette[s].label));
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string RenderConceptBars(const BarChartSpec& spec) {
  if (spec.ranking.empty()) throw Error("bar chart: empty ranking");
  if (spec.top_m == 0) throw Error("bar chart: top_m must be at least 1");
  if (spec.width <= 0) throw Error("bar chart: canvas must be positive");
  const std::size_t m = std::min(spec.top_m, spec.ranking.size());
  constexpr double kLabelWidth = 180.0;
  constexpr double kAnnotationWidth = 70.0;
  constexpr double kRow = 22.0;
  constexpr double kBar = 16.0;
  constexpr double kTop = 30.0;
  const double axis = std::max(1.0, spec.width - kLabelWidth - kAnnotationWidth);
  const int height = static_cast<int>(kTop + kRow * static_cast<double>(m) + 10.0);

  std::string out = SvgOpen(spec.width, height);
  if (!spec.title.empty()) {
    out += fmt::format(
        "<text x=\"6.0000\" y=\"18.0000\" font-family=\"sans-serif\" "
        "font-size=\"13\">{}</text>\n",
        XmlEscape(spec.title));
  }
  out += "<g id=\"bars\" font-family=\"sans-serif\" font-size=\"11\">\n";
  for (std::size_t i = 0; i < m; ++i) {
    const auto& c = spec.ranking[i];
    const double y = kTop + kRow * static_cast<double>(i);
    const double w = std::clamp(c.score, 0.0, 1.0) * axis;
    out += fmt::format(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>"
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>"
        "<text x=\"{}\" y=\"{}\">{}</text>\n",
        Fixed(kLabelWidth - 6.0), Fixed(y + 12.0), XmlEscape(c.name), Fixed(kLabelWidth),
        Fixed(y), Fixed(w), Fixed(kBar), kInlierBlue, Fixed(kLabelWidth + w + 4.0),
        Fixed(y + 12.0), Fixed(c.score));
  }
  out += "</g>\n</svg>\n";
  return out;
}

std::string ExplainScene(const SelectionManifest& manifest, const SceneIndex& scenes,
                         std::span<const ObjectAssessment> assessments,
                         std::string_view scene_id) {
  const SceneExplanation* e = manifest.Find(scene_id);
  if (e == nullptr) {
    throw Error(fmt::format("scene {} is not in the manifest", scene_id));
  }
  const auto& s = manifest.strategy;
  std::string out = fmt::format("scene: {}\n", scene_id);
  out += fmt::format("strategy: {} (random {}, mined {}, seed {})\n",
                     StrategyKindName(s.kind), s.random_fraction, s.mined_fraction, s.seed);
  if (!s.target_concepts.empty()) {
    out += fmt::format("targets: {}\n", fmt::join(s.target_concepts, ", "));
  }
  if (const auto it = scenes.find(std::string(scene_id)); it != scenes.end()) {
    out += fmt::format("objects in scene: {}\n", it->second.size());
  }
  out += fmt::format("reason: {}\n", SceneReasonName(e->reason));
  if (e->reason == SceneReason::kRandom) {
    out += "clause: non-overlapping random share, drawn uniformly from scenes not "
           "already mined\n";
    return out;
  }
  out += fmt::format("clause: {}\n", StrategyClause(s.kind));
  out += fmt::format("evidence ({} of {}):\n", e->evidence.size(), e->evidence_total);
  const auto index = Index(assessments);
  for (const auto& ev : e->evidence) {
    const auto parts = DecodeCombined(ev.o_combined);
    out += fmt::format(
        "  - {} detector={} top_concept={} score={} O={} (o_tsne={}, o_if={}) R={} "
        "gate={}\n",
        ev.object_id, ev.detector_class, ev.top_concept, Fixed(ev.top_score),
        ev.o_combined, parts.o_tsne, parts.o_if, ev.r_flag, ev.gate);
    if (const auto it = index.find(ev.object_id); it != index.end()) {
      const auto& a = *it->second;
      out += fmt::format("      if_score={} d_knn={} category={} concepts={{{}}}\n",
                         Fixed(a.if_score), Fixed(a.d_knn), CategoryName(a.category),
                         fmt::join(a.concepts, ", "));
    }
  }
  return out;
}

std::string ExplainObject(std::span<const ObjectAssessment> assessments,
                          std::string_view object_id, std::size_t top_m) {
  const auto index = Index(assessments);
  const auto it = index.find(std::string(object_id));
  if (it == index.end()) throw Error(fmt::format("unknown object {}", object_id));
  const auto& a = *it->second;
  const auto parts = DecodeCombined(a.o_combined);
  std::string out = fmt::format("object: {}\nscene: {}\ndetector: {}\n", a.object_id,
                                a.scene_id, a.detector_class);
  out += fmt::format("if_score: {} o_if: {}\nd_knn: {} o_tsne: {}\nO: {}\n",
                     Fixed(a.if_score), parts.o_if, Fixed(a.d_knn), parts.o_tsne,
                     a.o_combined);
  out += fmt::format("top concept: {} ({})\ncategory: {}\n", a.top_concept,
                     Fixed(a.top_score), CategoryName(a.category));
  out += fmt::format("concepts: {{{}}}\nR: {}\n", fmt::join(a.concepts, ", "), a.r_flag);
  out += "ranking:\n";
  for (std::size_t i = 0; i < a.ranked.size() && i < top_m; ++i) {
    out += fmt::format("  {:2d}. {} {}\n", i + 1, a.ranked[i].name,
                       Fixed(a.ranked[i].score));
  }
  return out;
}

}  // namespace raremine
