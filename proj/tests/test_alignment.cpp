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

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "iasr/alignment_study.hpp"
#include "iasr/error.hpp"

using namespace iasr;
using namespace iasr::alignment;

namespace {

// Builds one item's annotations from a rating list; the last `experts`
// ratings belong to expert annotators e0, e1, ...
void rate(std::vector<AnnotationRecord>& out, const std::string& item, const std::vector<int>& ratings,
          int experts = 0) {
  const int n = static_cast<int>(ratings.size());
  for (int i = 0; i < n; ++i) {
    const bool expert = i >= n - experts;
    out.push_back({item, expert ? "e" + std::to_string(i - (n - experts)) : "n" + std::to_string(i),
                   ratings[i], expert ? Cohort::kExpert : Cohort::kNonExpert});
  }
}

const AlignmentRow& overall(const std::vector<AlignmentRow>& rows) { return rows.back(); }

}  // namespace

TEST_CASE("judge identical to a unanimous consensus gives r = 1") {
  std::vector<JudgmentRecord> j{{"a", "d", 1}, {"b", "d", 0}, {"c", "d", 1}, {"d", "d", 0}};
  std::vector<AnnotationRecord> a;
  rate(a, "a", {1, 1, 1});
  rate(a, "b", {0, 0, 0});
  rate(a, "c", {1, 1, 1});
  rate(a, "d", {0, 0, 0});
  const auto rows = alignment_study(j, a);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].group == "d");
  CHECK(overall(rows).group == "Overall");
  CHECK(overall(rows).llm_r == doctest::Approx(1.0).epsilon(1e-12));

  for (auto& r : j) r.judge = 1 - r.judge;
  CHECK(overall(alignment_study(j, a)).llm_r == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("4-item case matches the closed form") {
  // judge = [1,1,0,0], consensus = [1, 0.75, 0.25, 0]: the consensus is
  // symmetric about 0.5, deviations (0.5, 0.25, -0.25, -0.5) against
  // (0.5, 0.5, -0.5, -0.5) give r = 0.75 / sqrt(1 * 0.625) = 3 / sqrt(10).
  std::vector<JudgmentRecord> j{{"a", "d", 1}, {"b", "d", 1}, {"c", "d", 0}, {"d", "d", 0}};
  std::vector<AnnotationRecord> a;
  rate(a, "a", {1, 1, 1, 1});
  rate(a, "b", {1, 1, 1, 0});
  rate(a, "c", {1, 0, 0, 0});
  rate(a, "d", {0, 0, 0, 0});
  CHECK(std::abs(overall(alignment_study(j, a)).llm_r - 3.0 / std::sqrt(10.0)) < 1e-12);
}

TEST_CASE("expert column averages per-expert correlations with the consensus") {
  std::vector<JudgmentRecord> j{{"a", "x", 1}, {"b", "x", 0}, {"c", "y", 1}, {"d", "y", 0}};
  std::vector<AnnotationRecord> a;
  // Two experts; e1 is constant inside group "x" and is left out there.
  rate(a, "a", {1, 1, 1, 1}, 2);
  rate(a, "b", {0, 1, 0, 1}, 2);
  rate(a, "c", {1, 0, 1, 1}, 2);
  rate(a, "d", {0, 0, 0, 0}, 2);
  const auto rows = alignment_study(j, a);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].n_experts == 1);
  REQUIRE(rows[0].expert_r);
  CHECK(*rows[0].expert_r == doctest::Approx(1.0));
  CHECK(rows[1].n_experts == 2);
  CHECK(overall(rows).n_items == 4);
}

TEST_CASE("degenerate consensus inside a group") {
  std::vector<JudgmentRecord> j{{"a", "d", 1}, {"b", "d", 0}};
  std::vector<AnnotationRecord> a;
  rate(a, "a", {1, 1});
  rate(a, "b", {1, 1});
  CHECK_THROWS_AS(alignment_study(j, a), DegenerateInput);
  CHECK_THROWS_AS(alignment_study({}, a), EmptyBatch);
  CHECK_THROWS_AS(alignment_study({{"zzz", "d", 1}}, a), PreconditionViolation);
}

TEST_CASE("input files") {
  std::istringstream judgments(R"({"item_id":"a","dataset":"giga","judge":1}
{"item_id":"b","judge":0}
)");
  const auto j = parse_judgments(judgments);
  REQUIRE(j.size() == 2);
  CHECK(j[1].dataset == "default");

  std::istringstream dup(R"({"item_id":"a","judge":1}
{"item_id":"a","judge":0}
)");
  CHECK_THROWS_AS(parse_judgments(dup), MalformedManifest);
  std::istringstream nonbinary(R"({"item_id":"a","judge":2})");
  CHECK_THROWS_AS(parse_judgments(nonbinary), MalformedManifest);

  std::istringstream csv("rating,cohort,item_id,annotator_id\n1,expert,a,e1\n0,nonexpert,\"a\",n1\n");
  const auto a = parse_annotations(csv);
  REQUIRE(a.size() == 2);
  CHECK(a[0].cohort == Cohort::kExpert);
  CHECK(a[1].item_id == "a");
  CHECK(a[1].rating == 0);

  std::istringstream bad_rating("item_id,annotator_id,cohort,rating\na,n1,nonexpert,0.5\n");
  CHECK_THROWS_AS(parse_annotations(bad_rating), MalformedManifest);
  std::istringstream bad_header("item,annotator,cohort,rating\n");
  CHECK_THROWS_AS(parse_annotations(bad_header), MalformedManifest);
}

TEST_CASE("rendered table carries per-dataset rows and Overall") {
  std::vector<AlignmentRow> rows{{"gigaspeech", 4, 0.97, 0.83, 2}, {"Overall", 4, 0.97, std::nullopt, 0}};
  const std::string t = render_alignment_table(rows);
  CHECK(t.find("LLM (r)") != std::string::npos);
  CHECK(t.find("Expert (r)") != std::string::npos);
  CHECK(t.find("gigaspeech    0.9700      0.8300") != std::string::npos);
  CHECK(t.find("Overall       0.9700           -") != std::string::npos);
  CHECK(render_alignment_csv(rows) ==
        "dataset,n_items,llm_r,expert_r,n_experts\ngigaspeech,4,0.9700,0.8300,2\nOverall,4,0.9700,,0\n");
}
