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

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "iasr/sim.hpp"

namespace iasr::report {

enum class Format { kTable, kCsv, kCurveData };

Format parse_format(std::string_view name);

inline const std::vector<int> kDefaultTableLoops{0, 1, 2, 3, 10};

// table:     loop rows (default 0,1,2,3,10; loops beyond the run are skipped),
//            per-dataset column groups of token metric / SER / S2ER, in percent
// csv:       every loop x dataset, ratios to four decimals
// curvedata: JSONL, one {dataset, loop, metric, value} per point
std::string emit_report(const std::vector<sim::DatasetReport>& datasets, Format format,
                        const std::vector<int>& table_loops = kDefaultTableLoops);

// Offline scoring of {id, ref, hyp} JSONL.
struct ScorePair {
  std::string id;
  std::string ref;
  std::string hyp;
};

struct ScoredPair {
  std::string id;
  metrics::AlignmentCounts counts;
};

struct ScoreSummary {
  textnorm::TokenMode mode = textnorm::TokenMode::kWord;
  std::vector<ScoredPair> pairs;
  metrics::AlignmentCounts totals;
  double token_error_rate = 0.0;
  double sentence_error_rate = 0.0;
};

// Throws MalformedManifest with the line number on bad input.
std::vector<ScorePair> parse_pairs(std::istream& in);
// Throws EmptyBatch on no pairs and EmptyReference if a reference normalizes
// to nothing.
ScoreSummary score_pairs(const std::vector<ScorePair>& pairs, textnorm::TokenMode mode,
                         const textnorm::NormalizationProfile& profile);
std::string render_score(const ScoreSummary& summary, Format format);

// Shortest of up to four decimals that keeps at least one: 0.6667, 0.25, 0.0.
std::string format_ratio(double value);

}  // namespace iasr::report
