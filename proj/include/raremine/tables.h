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

// On-disk stage tables written by the mining pipeline.
//
//   iforest_scores.csv   object_id,if_score,o_if
//   layout.csv           object_id,y0,y1
//   outliers.csv         object_id,d_knn,o_tsne,if_score,o_if,o_combined
//   assessments.jsonl    one ObjectAssessment per line, full concept ranking
//
// Rows follow canonical object order. Reals are written with 17 significant
// digits so a table reads back bit-exactly. Fields holding a comma, quote or
// line break are quoted with doubled inner quotes.

#ifndef RAREMINE_TABLES_H_
#define RAREMINE_TABLES_H_

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "raremine/assessment.h"
#include "raremine/common.h"
#include "raremine/tsne.h"

namespace raremine {

struct IForestTableRow {
  std::string object_id;
  double if_score = 0.0;
  std::uint8_t o_if = 0;

  friend bool operator==(const IForestTableRow&, const IForestTableRow&) = default;
};

std::string SerializeIForestTable(std::span<const IForestTableRow> rows);
std::vector<IForestTableRow> ParseIForestTable(std::string_view text);

std::string SerializeLayoutTable(const Layout2D& layout);
Layout2D ParseLayoutTable(std::string_view text);

std::string SerializeOutlierTable(std::span<const OutlierRecord> rows);
std::vector<OutlierRecord> ParseOutlierTable(std::string_view text);

std::string SerializeAssessments(std::span<const ObjectAssessment> rows);
std::vector<ObjectAssessment> ParseAssessments(std::string_view text);

// Splits one CSV record into fields. Throws Error on an unterminated quote.
std::vector<std::string> SplitCsvRecord(std::string_view line);
std::string CsvField(std::string_view value);

}  // namespace raremine

#endif  // RAREMINE_TABLES_H_
