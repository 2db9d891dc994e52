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

#include "raremine/tables.h"

#include <charconv>
#include <system_error>
#include <utility>

#include <fmt/format.h>

#include "json.hpp"

namespace raremine {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string Real(double v) { return fmt::format("{:.17g}", v); }

// Splits text into records, honouring quoted line breaks.
std::vector<std::vector<std::string>> ParseCsv(std::string_view text,
                                               std::string_view table) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n') {
      fields.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(fields));
      fields.clear();
      any = false;
    } else if (c != '\r') {
      field.push_back(c);
      any = true;
    }
  }
  if (quoted) throw Error(fmt::format("{}: unterminated quoted field", table));
  if (any) {
    fields.push_back(std::move(field));
    records.push_back(std::move(fields));
  }
  return records;
}

std::vector<std::vector<std::string>> ParseTable(std::string_view text,
                                                 std::string_view table,
                                                 std::string_view header) {
  auto records = ParseCsv(text, table);
  if (records.empty()) throw Error(fmt::format("{}: missing header", table));
  const auto expected = SplitCsvRecord(header);
  if (records.front() != expected) {
    throw Error(fmt::format("{}: unexpected header, want '{}'", table, header));
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != expected.size()) {
      throw Error(fmt::format("{}: line {} has {} fields, want {}", table, r + 1,
                              records[r].size(), expected.size()));
    }
  }
  records.erase(records.begin());
  return records;
}

double ParseReal(const std::string& s, std::string_view table, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(fmt::format("{}: line {}: bad number '{}'", table, line, s));
  }
  return v;
}

std::uint8_t ParseSmall(const std::string& s, std::uint8_t max, std::string_view table,
                        std::size_t line) {
  unsigned v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v > max) {
    throw Error(fmt::format("{}: line {}: bad flag '{}'", table, line, s));
  }
  return static_cast<std::uint8_t>(v);
}

constexpr std::string_view kIForestHeader = "object_id,if_score,o_if";
constexpr std::string_view kLayoutHeader = "object_id,y0,y1";
constexpr std::string_view kOutlierHeader =
    "object_id,d_knn,o_tsne,if_score,o_if,o_combined";

}  // namespace

std::string CsvField(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(value);
  }
  std::string out = "\"";
  for (const char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::vector<std::string> SplitCsvRecord(std::string_view line) {
  auto records = ParseCsv(line, "csv");
  if (records.empty()) return {""};
  if (records.size() > 1) throw Error("csv: record spans several lines");
  return std::move(records.front());
}

std::string SerializeIForestTable(std::span<const IForestTableRow> rows) {
  std::string out = std::string(kIForestHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{}\n", CsvField(r.object_id), Real(r.if_score), r.o_if);
  }
  return out;
}

std::vector<IForestTableRow> ParseIForestTable(std::string_view text) {
  constexpr std::string_view kName = "iforest_scores.csv";
  std::vector<IForestTableRow> rows;
  std::size_t line = 1;
  for (auto& f : ParseTable(text, kName, kIForestHeader)) {
    ++line;
    rows.push_back({std::move(f[0]), ParseReal(f[1], kName, line),
                    ParseSmall(f[2], 1, kName, line)});
  }
  return rows;
}

std::string SerializeLayoutTable(const Layout2D& layout) {
  if (layout.y.cols() != 2 || layout.y.rows() != layout.row_ids.size()) {
    throw Error("layout table: expected an N x 2 layout aligned with its ids");
  }
  std::string out = std::string(kLayoutHeader) + "\n";
  for (std::size_t i = 0; i < layout.row_ids.size(); ++i) {
    out += fmt::format("{},{},{}\n", CsvField(layout.row_ids[i]), Real(layout.y(i, 0)),
                       Real(layout.y(i, 1)));
  }
  return out;
}

Layout2D ParseLayoutTable(std::string_view text) {
  constexpr std::string_view kName = "layout.csv";
  const auto records = ParseTable(text, kName, kLayoutHeader);
  Layout2D layout;
  layout.y = Matrix(records.size(), 2);
  std::size_t line = 1;
  for (std::size_t i = 0; i < records.size(); ++i) {
    ++line;
    layout.row_ids.push_back(records[i][0]);
    layout.y(i, 0) = ParseReal(records[i][1], kName, line);
    layout.y(i, 1) = ParseReal(records[i][2], kName, line);
  }
  return layout;
}

std::string SerializeOutlierTable(std::span<const OutlierRecord> rows) {
  std::string out = std::string(kOutlierHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{}\n", CsvField(r.object_id), Real(r.d_knn),
                       r.o_tsne, Real(r.if_score), r.o_if, r.o_combined);
  }
  return out;
}

std::vector<OutlierRecord> ParseOutlierTable(std::string_view text) {
  constexpr std::string_view kName = "outliers.csv";
  std::vector<OutlierRecord> rows;
  std::size_t line = 1;
  for (auto& f : ParseTable(text, kName, kOutlierHeader)) {
    ++line;
    OutlierRecord r;
    r.object_id = std::move(f[0]);
    r.d_knn = ParseReal(f[1], kName, line);
    r.o_tsne = ParseSmall(f[2], 1, kName, line);
    r.if_score = ParseReal(f[3], kName, line);
    r.o_if = ParseSmall(f[4], 1, kName, line);
    r.o_combined = ParseSmall(f[5], 3, kName, line);
    if (r.o_combined != 2 * r.o_tsne + r.o_if) {
      throw Error(fmt::format("{}: line {}: o_combined disagrees with its flags", kName,
                              line));
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string SerializeAssessments(std::span<const ObjectAssessment> rows) {
  std::string out;
  for (const auto& a : rows) {
    ordered_json j;
    j["object_id"] = a.object_id;
    j["scene_id"] = a.scene_id;
    j["detector_class"] = a.detector_class;
    j["if_score"] = a.if_score;
    j["o_if"] = a.o_if;
    j["d_knn"] = a.d_knn;
    j["o_tsne"] = a.o_tsne;
    j["o_combined"] = a.o_combined;
    j["top_concept"] = a.top_concept;
    j["top_score"] = a.top_score;
    j["category"] = CategoryName(a.category);
    j["concepts"] = a.concepts;
    j["r_flag"] = a.r_flag;
    j["ranked"] = ordered_json::array();
    for (const auto& s : a.ranked) j["ranked"].push_back({{"name", s.name}, {"score", s.score}});
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<ObjectAssessment> ParseAssessments(std::string_view text) {
  std::vector<ObjectAssessment> rows;
  std::size_t line = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto record = text.substr(start, end - start);
    start = end + 1;
    ++line;
    if (record.empty()) continue;
    try {
      const json j = json::parse(record);
      ObjectAssessment a;
      a.object_id = j.at("object_id").get<std::string>();
      a.scene_id = j.at("scene_id").get<std::string>();
      a.detector_class = j.at("detector_class").get<std::string>();
      a.if_score = j.at("if_score").get<double>();
      a.o_if = j.at("o_if").get<std::uint8_t>();
      a.d_knn = j.at("d_knn").get<double>();
      a.o_tsne = j.at("o_tsne").get<std::uint8_t>();
      a.o_combined = j.at("o_combined").get<std::uint8_t>();
      a.top_concept = j.at("top_concept").get<std::string>();
      a.top_score = j.at("top_score").get<double>();
      a.category = ParseCategory(j.at("category").get<std::string>());
      a.concepts = j.at("concepts").get<std::set<std::string>>();
      a.r_flag = j.at("r_flag").get<std::uint8_t>();
      for (const auto& s : j.at("ranked")) {
        a.ranked.push_back({s.at("name").get<std::string>(), s.at("score").get<double>()});
      }
      rows.push_back(std::move(a));
    } catch (const json::exception& e) {
      throw Error(fmt::format("assessments.jsonl: line {}: {}", line, e.what()));
    }
  }
  return rows;
}

}  // namespace raremine
