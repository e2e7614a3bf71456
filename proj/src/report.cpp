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

#include "iasr/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iasr/error.hpp"

namespace iasr::report {

namespace {

constexpr int kCell = 8;
constexpr int kLoopCol = 6;

std::string pad_left(const std::string& s, int width) {
  return s.size() >= static_cast<std::size_t>(width) ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, int width) {
  return s.size() >= static_cast<std::size_t>(width) ? s : s + std::string(width - s.size(), ' ');
}

std::string center(const std::string& s, int width) {
  if (s.size() >= static_cast<std::size_t>(width)) return s;
  const std::size_t total = static_cast<std::size_t>(width) - s.size();
  const std::size_t left = total / 2;
  return std::string(left, ' ') + s + std::string(total - left, ' ');
}

std::string rstrip(std::string s) {
  s.erase(s.find_last_not_of(' ') + 1);
  return s;
}

std::string percent(double ratio) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", ratio * 100.0);
  return buf;
}

const metrics::MetricReport* row_for(const sim::DatasetReport& d, int loop) {
  for (const auto& r : d.loops) {
    if (r.loop_index == loop) return &r;
  }
  return nullptr;
}

std::string table(const std::vector<sim::DatasetReport>& datasets, const std::vector<int>& loops) {
  const int group = 3 * kCell;
  std::ostringstream out;

  std::string title = pad_right("", kLoopCol);
  std::string header = pad_right("Loop", kLoopCol);
  std::string rule(kLoopCol, '-');
  for (const auto& d : datasets) {
    title += " |" + center(d.tag, group);
    header += " |" + pad_left(std::string(textnorm::metric_name(d.mode)), kCell) + pad_left("SER", kCell) +
              pad_left("S2ER", kCell);
    rule += "-+" + std::string(group, '-');
  }
  out << rstrip(title) << '\n' << rstrip(header) << '\n' << rule << '\n';

  for (int loop : loops) {
    bool present = !datasets.empty();
    for (const auto& d : datasets) present = present && row_for(d, loop) != nullptr;
    if (!present) continue;
    std::string line = pad_right(std::to_string(loop), kLoopCol);
    for (const auto& d : datasets) {
      const auto* r = row_for(d, loop);
      line += " |" + pad_left(percent(r->token_error_rate), kCell) + pad_left(percent(r->sentence_error_rate), kCell) +
              pad_left(percent(r->s2er), kCell);
    }
    out << line << '\n';
  }
  out << "All values are percentages.\n";
  return out.str();
}

std::string csv(const std::vector<sim::DatasetReport>& datasets) {
  std::ostringstream out;
  out << "loop,dataset,token_metric,token_error_rate,sentence_error_rate,s2er,n_utterances,n_flagged\n";
  for (const auto& d : datasets) {
    for (const auto& r : d.loops) {
      out << r.loop_index << ',' << d.tag << ',' << textnorm::metric_name(d.mode) << ','
          << format_ratio(r.token_error_rate) << ',' << format_ratio(r.sentence_error_rate) << ','
          << format_ratio(r.s2er) << ',' << r.n_utterances << ',' << r.n_flagged << '\n';
    }
  }
  return out.str();
}

std::string curve_data(const std::vector<sim::DatasetReport>& datasets) {
  std::ostringstream out;
  for (const auto& d : datasets) {
    for (const auto& r : d.loops) {
      const std::pair<std::string, double> points[] = {
          {std::string(textnorm::metric_name(d.mode)), r.token_error_rate},
          {"SER", r.sentence_error_rate},
          {"S2ER", r.s2er},
      };
      for (const auto& [metric, value] : points) {
        out << nlohmann::json{{"dataset", d.tag}, {"loop", r.loop_index}, {"metric", metric}, {"value", value}}.dump()
            << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace

Format parse_format(std::string_view name) {
  if (name == "table") return Format::kTable;
  if (name == "csv") return Format::kCsv;
  if (name == "curvedata") return Format::kCurveData;
  throw ConfigError("unknown report format '" + std::string(name) + "'");
}

std::string format_ratio(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  std::string s = buf;
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  if (s == "-0.0") s = "0.0";
  return s;
}

std::vector<ScorePair> parse_pairs(std::istream& in) {
  std::vector<ScorePair> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      pairs.push_back({j.at("id").get<std::string>(), j.at("ref").get<std::string>(), j.at("hyp").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw MalformedManifest(e.what(), lineno);
    }
  }
  return pairs;
}

ScoreSummary score_pairs(const std::vector<ScorePair>& pairs, textnorm::TokenMode mode,
                         const textnorm::NormalizationProfile& profile) {
  ScoreSummary summary;
  summary.mode = mode;
  std::vector<metrics::TokenPair> tokenized;
  for (const auto& p : pairs) {
    auto ref = textnorm::tokenize_raw(p.ref, mode, profile);
    auto hyp = textnorm::tokenize_raw(p.hyp, mode, profile);
    if (ref.empty()) throw EmptyReference("reference of '" + p.id + "' is empty after normalization");
    const auto counts = metrics::align(ref, hyp);
    summary.totals += counts;
    summary.pairs.push_back({p.id, counts});
    tokenized.emplace_back(std::move(ref), std::move(hyp));
  }
  summary.sentence_error_rate = metrics::sentence_error_rate(tokenized);
  summary.token_error_rate = metrics::token_error_rate(summary.totals);
  return summary;
}

std::string render_score(const ScoreSummary& s, Format format) {
  std::ostringstream out;
  const std::string metric(textnorm::metric_name(s.mode));
  if (format == Format::kCsv) {
    out << "id,ref_len,hyp_len,substitutions,deletions,insertions,error_rate\n";
    auto row = [&](const std::string& id, const metrics::AlignmentCounts& c) {
      out << id << ',' << c.ref_len << ',' << c.hyp_len << ',' << c.substitutions << ',' << c.deletions << ','
          << c.insertions << ',' << format_ratio(metrics::token_error_rate(c)) << '\n';
    };
    for (const auto& p : s.pairs) row(p.id, p.counts);
    row("TOTAL", s.totals);
    return out.str();
  }
  out << metric << ' ' << percent(s.token_error_rate) << "% [ " << s.totals.distance() << " / "
      << s.totals.ref_len << ", " << s.totals.insertions << " ins, " << s.totals.deletions << " del, "
      << s.totals.substitutions << " sub ]\n";
  std::size_t wrong = 0;
  for (const auto& p : s.pairs) wrong += p.counts.distance() > 0 ? 1 : 0;
  out << "SER " << percent(s.sentence_error_rate) << "% [ " << wrong << " / " << s.pairs.size() << " ]\n";
  return out.str();
}

std::string emit_report(const std::vector<sim::DatasetReport>& datasets, Format format,
                        const std::vector<int>& table_loops) {
  switch (format) {
    case Format::kTable: return table(datasets, table_loops);
    case Format::kCsv: return csv(datasets);
    case Format::kCurveData: return curve_data(datasets);
  }
  return {};
}

}  // namespace iasr::report
