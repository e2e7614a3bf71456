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

#include "iasr/alignment_study.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iasr/error.hpp"
#include "iasr/metrics.hpp"

namespace iasr::alignment {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

// RFC 4180-style field split; doubled quotes inside quoted fields.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(trim(cur));
  return fields;
}

int binary(const std::string& s, std::size_t line) {
  if (s == "0") return 0;
  if (s == "1") return 1;
  throw MalformedManifest("rating must be 0 or 1, got '" + s + "'", line);
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

std::vector<JudgmentRecord> parse_judgments(std::istream& in) {
  std::vector<JudgmentRecord> out;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      JudgmentRecord r;
      r.item_id = j.at("item_id").get<std::string>();
      r.dataset = j.value("dataset", "default");
      r.judge = j.at("judge").get<int>();
      if (r.judge != 0 && r.judge != 1) throw MalformedManifest("judge must be 0 or 1", lineno);
      if (!seen.insert(r.item_id).second) throw MalformedManifest("duplicate item_id '" + r.item_id + "'", lineno);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw MalformedManifest(e.what(), lineno);
    }
  }
  return out;
}

std::vector<JudgmentRecord> load_judgments(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedManifest("cannot open " + path.string(), 0);
  return parse_judgments(in);
}

std::vector<AnnotationRecord> parse_annotations(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto header = split_csv(line);
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
    break;
  }
  for (const char* name : {"item_id", "annotator_id", "cohort", "rating"}) {
    if (!col.count(name)) throw MalformedManifest(std::string("annotation header lacks ") + name, lineno);
  }
  std::vector<AnnotationRecord> out;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto f = split_csv(line);
    if (f.size() < col.size()) throw MalformedManifest("too few columns", lineno);
    AnnotationRecord r;
    r.item_id = f[col["item_id"]];
    r.annotator_id = f[col["annotator_id"]];
    const std::string cohort = f[col["cohort"]];
    if (cohort == "expert") r.cohort = Cohort::kExpert;
    else if (cohort == "nonexpert") r.cohort = Cohort::kNonExpert;
    else throw MalformedManifest("cohort must be expert or nonexpert, got '" + cohort + "'", lineno);
    r.rating = binary(f[col["rating"]], lineno);
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<AnnotationRecord> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MalformedManifest("cannot open " + path.string(), 0);
  return parse_annotations(in);
}

std::vector<AlignmentRow> alignment_study(const std::vector<JudgmentRecord>& judgments,
                                          const std::vector<AnnotationRecord>& annotations) {
  if (judgments.empty()) throw EmptyBatch("no judgments");

  std::map<std::string, std::vector<const AnnotationRecord*>> by_item;
  for (const auto& a : annotations) by_item[a.item_id].push_back(&a);

  std::map<std::string, double> consensus;
  for (const auto& j : judgments) {
    auto it = by_item.find(j.item_id);
    if (it == by_item.end()) throw PreconditionViolation("item '" + j.item_id + "' has no annotations");
    double sum = 0.0;
    for (const auto* a : it->second) sum += a->rating;
    consensus[j.item_id] = sum / static_cast<double>(it->second.size());
  }

  std::vector<std::string> order;
  std::map<std::string, std::vector<const JudgmentRecord*>> groups;
  for (const auto& j : judgments) {
    if (!groups.count(j.dataset)) order.push_back(j.dataset);
    groups[j.dataset].push_back(&j);
  }

  auto evaluate = [&](const std::string& name, const std::vector<const JudgmentRecord*>& members) {
    AlignmentRow row;
    row.group = name;
    row.n_items = members.size();
    std::vector<double> judge;
    std::vector<double> cons;
    for (const auto* j : members) {
      judge.push_back(j->judge);
      cons.push_back(consensus.at(j->item_id));
    }
    try {
      row.llm_r = metrics::pearson(judge, cons);
    } catch (const DegenerateInput& e) {
      throw DegenerateInput("group '" + name + "': " + e.what());
    }

    // Expert ratings restricted to this group's items.
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> experts;
    for (const auto* j : members) {
      for (const auto* a : by_item.at(j->item_id)) {
        if (a->cohort != Cohort::kExpert) continue;
        auto& [x, y] = experts[a->annotator_id];
        x.push_back(a->rating);
        y.push_back(consensus.at(j->item_id));
      }
    }
    std::vector<double> rs;
    for (const auto& [id, xy] : experts) {
      try {
        rs.push_back(metrics::pearson(xy.first, xy.second));
      } catch (const DegenerateInput&) {
        // A constant expert carries no correlation signal; left out of the mean.
      }
    }
    row.n_experts = rs.size();
    if (!rs.empty()) row.expert_r = mean(rs);
    return row;
  };

  std::vector<AlignmentRow> rows;
  for (const auto& name : order) rows.push_back(evaluate(name, groups[name]));
  std::vector<const JudgmentRecord*> all;
  for (const auto& j : judgments) all.push_back(&j);
  rows.push_back(evaluate("Overall", all));
  return rows;
}

std::string render_alignment_table(const std::vector<AlignmentRow>& rows) {
  std::size_t width = std::string("Dataset").size();
  for (const auto& r : rows) width = std::max(width, r.group.size());
  auto pad = [&](const std::string& s) { return s + std::string(width - s.size(), ' '); };

  std::ostringstream out;
  out << pad("Dataset") << "   LLM (r)  Expert (r)\n";
  out << std::string(width, '-') << "  --------  ----------\n";
  for (const auto& r : rows) {
    if (r.group == "Overall") out << std::string(width, '-') << "  --------  ----------\n";
    const std::string expert = r.expert_r ? fixed4(*r.expert_r) : "-";
    out << pad(r.group) << "  " << std::string(8 - fixed4(r.llm_r).size(), ' ') << fixed4(r.llm_r) << "  "
        << std::string(expert.size() < 10 ? 10 - expert.size() : 0, ' ') << expert << '\n';
  }
  return out.str();
}

std::string render_alignment_csv(const std::vector<AlignmentRow>& rows) {
  std::ostringstream out;
  out << "dataset,n_items,llm_r,expert_r,n_experts\n";
  for (const auto& r : rows) {
    out << r.group << ',' << r.n_items << ',' << fixed4(r.llm_r) << ','
        << (r.expert_r ? fixed4(*r.expert_r) : std::string()) << ',' << r.n_experts << '\n';
  }
  return out.str();
}

}  // namespace iasr::alignment
