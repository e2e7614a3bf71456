// Copyright 2026 The iasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace iasr::alignment {

enum class Cohort { kNonExpert, kExpert };

struct JudgmentRecord {
  std::string item_id;
  std::string dataset;
  int judge = 0;
};

struct AnnotationRecord {
  std::string item_id;
  std::string annotator_id;
  int rating = 0;
  Cohort cohort = Cohort::kNonExpert;
};

// Judgments JSONL: {"item_id", "dataset", "judge": 0|1}.
std::vector<JudgmentRecord> parse_judgments(std::istream& in);
std::vector<JudgmentRecord> load_judgments(const std::filesystem::path& path);

// CSV with header row naming item_id, annotator_id, cohort, rating (any order).
// cohort is "expert" or "nonexpert".
std::vector<AnnotationRecord> parse_annotations(std::istream& in);
std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path);

struct AlignmentRow {
  std::string group;  // dataset tag, or "Overall"
  std::size_t n_items = 0;
  double llm_r = 0.0;
  // Mean over experts of r(expert, consensus); empty when no expert has a
  // usable (non-constant, >= 2 item) rating vector in the group.
  std::optional<double> expert_r;
  std::size_t n_experts = 0;
};

// Consensus per item is the mean of every annotator's rating. Rows follow the
// datasets' first appearance in `judgments`, then "Overall".
// Throws PreconditionViolation for a judged item without annotations and
// DegenerateInput when a group's consensus or judge vector is constant.
std::vector<AlignmentRow> alignment_study(const std::vector<JudgmentRecord>& judgments,
                                          const std::vector<AnnotationRecord>& annotations);

std::string render_alignment_table(const std::vector<AlignmentRow>& rows);
std::string render_alignment_csv(const std::vector<AlignmentRow>& rows);

}  // namespace iasr::alignment
