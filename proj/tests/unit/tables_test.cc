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

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "raremine/rng.h"
#include "raremine/tables.h"

namespace raremine {
namespace {

TEST(Csv, SplitAndQuote) {
  EXPECT_EQ(SplitCsvRecord("a,b,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(SplitCsvRecord("\"a,b\",\"say \"\"hi\"\"\",,x"),
            (std::vector<std::string>{"a,b", "say \"hi\"", "", "x"}));
  EXPECT_THROW(SplitCsvRecord("\"open,b"), Error);
  EXPECT_EQ(CsvField("plain"), "plain");
  EXPECT_EQ(CsvField("a,b"), "\"a,b\"");
  EXPECT_EQ(CsvField("q\"q"), "\"q\"\"q\"");
  for (const std::string v : {"x", "a,b", "\"", "line\nbreak", ""}) {
    const auto fields = SplitCsvRecord(CsvField(v) + "," + CsvField(v));
    ASSERT_EQ(fields.size(), 2u);
    EXPECT_EQ(fields[0], v);
  }
}

TEST(IForestTable, RoundTripsBitExact) {
  Rng rng(5);
  std::vector<IForestTableRow> rows;
  for (int i = 0; i < 50; ++i) {
    rows.push_back({"obj," + std::to_string(i), rng.Uniform01(),
                    static_cast<std::uint8_t>(i % 2)});
  }
  rows.push_back({"tiny", std::numeric_limits<double>::denorm_min(), 0});
  const auto text = SerializeIForestTable(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')), "object_id,if_score,o_if");
  EXPECT_EQ(ParseIForestTable(text), rows);
  EXPECT_THROW(ParseIForestTable("object_id,score\nx,1\n"), Error);
  EXPECT_THROW(ParseIForestTable("object_id,if_score,o_if\nx,abc,0\n"), Error);
  EXPECT_THROW(ParseIForestTable("object_id,if_score,o_if\nx,0.5,2\n"), Error);
}

TEST(LayoutTable, RoundTripsBitExact) {
  Rng rng(6);
  Layout2D layout;
  layout.y = Matrix(20, 2);
  for (std::size_t i = 0; i < 20; ++i) {
    layout.row_ids.push_back("o" + std::to_string(i));
    layout.y(i, 0) = rng.Normal() * 1e3;
    layout.y(i, 1) = -rng.Normal() / 7.0;
  }
  const auto back = ParseLayoutTable(SerializeLayoutTable(layout));
  EXPECT_EQ(back.row_ids, layout.row_ids);
  EXPECT_EQ(back.y.data(), layout.y.data());
}

TEST(OutlierTable, RoundTripAndConsistency) {
  std::vector<OutlierRecord> rows = {{"a", 0.25, 1, 0.7, 0, 2},
                                     {"b", 1.0 / 3.0, 0, 0.4, 1, 1},
                                     {"c", 2.0, 1, 0.9, 1, 3}};
  const auto text = SerializeOutlierTable(rows);
  EXPECT_EQ(text.substr(0, text.find('\n')),
            "object_id,d_knn,o_tsne,if_score,o_if,o_combined");
  EXPECT_EQ(ParseOutlierTable(text), rows);
  EXPECT_THROW(ParseOutlierTable("object_id,d_knn,o_tsne,if_score,o_if,o_combined\n"
                                 "a,0.1,1,0.5,1,2\n"),
               Error);
}

TEST(Assessments, JsonLinesRoundTrip) {
  ObjectAssessment a;
  a.object_id = "obj-001";
  a.scene_id = "scene \"1\"";
  a.detector_class = "truck";
  a.if_score = 0.61;
  a.o_if = 1;
  a.d_knn = 0.123456789;
  a.o_tsne = 1;
  a.o_combined = 3;
  a.ranked = {{"construction_vehicle", 0.9}, {"truck", 0.8}, {"car", -0.1}};
  a.top_concept = "construction_vehicle";
  a.top_score = 0.9;
  a.category = Category::kRare;
  a.concepts = {"construction_vehicle", "truck"};
  a.r_flag = 1;
  ObjectAssessment b = a;
  b.object_id = "obj-002";
  const std::vector<ObjectAssessment> rows = {a, b};
  const auto text = SerializeAssessments(rows);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
  const auto back = ParseAssessments(text);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(SerializeAssessments(back), text);
  EXPECT_EQ(back[0].ranked, a.ranked);
  EXPECT_EQ(back[0].concepts, a.concepts);
  EXPECT_THROW(ParseAssessments("{\"object_id\": 1}\n"), Error);
}

}  // namespace
}  // namespace raremine
