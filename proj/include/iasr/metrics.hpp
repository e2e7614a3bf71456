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

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "iasr/textnorm.hpp"

namespace iasr::metrics {

using textnorm::TokenSequence;

struct AlignmentCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t hits = 0;
  std::size_t ref_len = 0;
  std::size_t hyp_len = 0;

  std::size_t distance() const noexcept { return substitutions + deletions + insertions; }
  AlignmentCounts& operator+=(const AlignmentCounts& o) noexcept;

  friend bool operator==(const AlignmentCounts&, const AlignmentCounts&) = default;
};

// One row of a per-loop table: error rates over a batch at one loop index.
struct MetricReport {
  int loop_index = 0;
  double token_error_rate = 0.0;
  double sentence_error_rate = 0.0;
  double s2er = 0.0;
  std::size_t n_utterances = 0;
  // Utterances whose state at this loop carries a flagged verdict or a stall.
  std::size_t n_flagged = 0;
};

// Unit-cost Levenshtein alignment. Among minimal alignments the backtrace
// prefers substitution, then deletion, then insertion.
// Throws ModeMismatch when the two sequences were tokenized differently.
AlignmentCounts align(const TokenSequence& ref, const TokenSequence& hyp);

// (S + D + I) / ref_len. Not clamped; may exceed 1.
double token_error_rate(const TokenSequence& ref, const TokenSequence& hyp);
// Corpus-level rate over accumulated counts: sum(errors) / sum(ref_len).
double token_error_rate(const AlignmentCounts& totals);

using TokenPair = std::pair<TokenSequence, TokenSequence>;

// Fraction of (ref, hyp) pairs with nonzero edit distance.
double sentence_error_rate(std::span<const TokenPair> pairs);

// Mean semantic mismatch: (1/N) * sum(1 - outcome_i), outcomes in {0, 1}.
double s2er(std::span<const int> outcomes);

// Sample Pearson correlation. Throws ModeMismatch on length mismatch,
// DegenerateInput on n < 2 or zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

}  // namespace iasr::metrics
