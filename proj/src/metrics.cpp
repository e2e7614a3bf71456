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

#include "iasr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "iasr/error.hpp"

namespace iasr::metrics {

AlignmentCounts& AlignmentCounts::operator+=(const AlignmentCounts& o) noexcept {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  hits += o.hits;
  ref_len += o.ref_len;
  hyp_len += o.hyp_len;
  return *this;
}

AlignmentCounts align(const TokenSequence& ref, const TokenSequence& hyp) {
  if (ref.mode() != hyp.mode()) {
    throw ModeMismatch("cannot align " + std::string(textnorm::to_string(ref.mode())) +
                       " tokens against " + std::string(textnorm::to_string(hyp.mode())) +
                       " tokens");
  }
  const auto& r = ref.tokens();
  const auto& h = hyp.tokens();
  const std::size_t n = r.size();
  const std::size_t m = h.size();
  const std::size_t width = m + 1;

  std::vector<std::size_t> cost((n + 1) * width);
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * width + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (r[i - 1] == h[j - 1] ? 0 : 1);
      const std::size_t del = at(i - 1, j) + 1;
      const std::size_t ins = at(i, j - 1) + 1;
      at(i, j) = std::min({diag, del, ins});
    }
  }

  AlignmentCounts counts;
  counts.ref_len = n;
  counts.hyp_len = m;
  std::size_t i = n;
  std::size_t j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = r[i - 1] == h[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (same) ++counts.hits; else ++counts.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++counts.deletions;
      --i;
      continue;
    }
    ++counts.insertions;
    --j;
  }
  return counts;
}

double token_error_rate(const AlignmentCounts& totals) {
  if (totals.ref_len == 0) throw EmptyReference("token error rate needs a non-empty reference");
  return static_cast<double>(totals.distance()) / static_cast<double>(totals.ref_len);
}

double token_error_rate(const TokenSequence& ref, const TokenSequence& hyp) {
  if (ref.empty()) throw EmptyReference("token error rate needs a non-empty reference");
  return token_error_rate(align(ref, hyp));
}

double sentence_error_rate(std::span<const TokenPair> pairs) {
  if (pairs.empty()) throw EmptyBatch("sentence error rate over an empty batch");
  std::size_t wrong = 0;
  for (const auto& [ref, hyp] : pairs) {
    if (ref.empty()) throw EmptyReference("sentence error rate needs non-empty references");
    if (align(ref, hyp).distance() > 0) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(pairs.size());
}

double s2er(std::span<const int> outcomes) {
  if (outcomes.empty()) throw EmptyBatch("S2ER over an empty batch");
  std::size_t mismatched = 0;
  for (int o : outcomes) {
    if (o != 0 && o != 1) throw PreconditionViolation("judge outcomes must be 0 or 1");
    if (o == 0) ++mismatched;
  }
  return static_cast<double>(mismatched) / static_cast<double>(outcomes.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ModeMismatch("pearson inputs differ in length");
  if (x.size() < 2) throw DegenerateInput("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const bool x_const = std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end();
  const bool y_const = std::adjacent_find(y.begin(), y.end(), std::not_equal_to<>()) == y.end();
  if (x_const || y_const || sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson input has zero variance");
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

}  // namespace iasr::metrics
