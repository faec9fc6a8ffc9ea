// Copyright 2026 The conrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "conrec/evaluation.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

#include "conrec/error.hpp"
#include "conrec/postprocess.hpp"
#include "conrec/text.hpp"

namespace conrec {
namespace {

struct Interval {
  std::size_t start;
  std::size_t end;
  std::string_view concept_id;
};

using DocIntervals = std::map<std::string, std::vector<Interval>, std::less<>>;

void check_known(const std::vector<LinkedMention>& pred,
                 const DocIdSet* corpus_ids) {
  if (corpus_ids == nullptr) return;
  for (const LinkedMention& m : pred) {
    if (!corpus_ids->contains(m.span.doc_id)) {
      throw Error("prediction for document not in corpus: " + m.span.doc_id);
    }
  }
}

std::pair<DocIntervals, DocIntervals> group(const std::vector<LinkedMention>& pred,
                                            const std::vector<GoldMention>& gold) {
  DocIntervals p, g;
  for (const LinkedMention& m : pred) {
    p[m.span.doc_id].push_back({m.span.start, m.span.end, m.concept_id});
  }
  for (const GoldMention& m : gold) {
    g[m.doc_id].push_back({m.start, m.end, m.concept_id});
  }
  const auto by_offsets = [](const Interval& a, const Interval& b) {
    return std::tie(a.start, a.end, a.concept_id) <
           std::tie(b.start, b.end, b.concept_id);
  };
  for (auto& [id, v] : p) std::stable_sort(v.begin(), v.end(), by_offsets);
  for (auto& [id, v] : g) std::stable_sort(v.begin(), v.end(), by_offsets);
  return {std::move(p), std::move(g)};
}

DocIdSet all_docs(const DocIntervals& p, const DocIntervals& g,
                  const DocIdSet* corpus_ids) {
  DocIdSet docs;
  if (corpus_ids != nullptr) docs = *corpus_ids;
  for (const auto& [id, v] : p) docs.insert(id);
  for (const auto& [id, v] : g) docs.insert(id);
  return docs;
}

const std::vector<Interval>& find_or_empty(const DocIntervals& m,
                                           std::string_view id) {
  static const std::vector<Interval> kEmpty;
  const auto it = m.find(id);
  return it == m.end() ? kEmpty : it->second;
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) {
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

std::size_t parse_offset(std::string_view s, std::size_t line_no) {
  s = trim(s);
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("bad offset '" + std::string(s) + "'", line_no);
  }
  return v;
}

nlohmann::json counts_json(const Counts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
}

nlohmann::json report_json(const EvalReport& r) {
  nlohmann::json j = counts_json(r.counts);
  j["precision"] = r.precision;
  j["recall"] = r.recall;
  j["f1"] = r.f1;
  // Metrics whose denominator was zero and were reported as 0 by convention.
  nlohmann::json undefined = nlohmann::json::array();
  if (r.counts.tp + r.counts.fp == 0) undefined.push_back("precision");
  if (r.counts.tp + r.counts.fn == 0) undefined.push_back("recall");
  if (r.precision + r.recall == 0.0) undefined.push_back("f1");
  j["zero_denominator"] = undefined;
  return j;
}

nlohmann::json validation_json(const GoldValidation& v) {
  return {{"unknown_documents", v.unknown_documents},
          {"out_of_range", v.out_of_range},
          {"unknown_concepts", v.unknown_concepts}};
}

}  // namespace

std::string_view to_string(EvalLevel level) {
  return level == EvalLevel::kMention ? "mention" : "document";
}

std::string_view to_string(MatchMode mode) {
  return mode == MatchMode::kOneToOne ? "one_to_one" : "any_overlap";
}

MatchMode match_mode_from_string(std::string_view s) {
  if (s == "one_to_one") return MatchMode::kOneToOne;
  if (s == "any_overlap") return MatchMode::kAnyOverlap;
  throw Error("unknown match mode: " + std::string(s));
}

EvalReport make_report(EvalLevel level, const Counts& counts) {
  EvalReport r;
  r.level = level;
  r.counts = counts;
  r.precision = ratio(counts.tp, counts.tp + counts.fp);
  r.recall = ratio(counts.tp, counts.tp + counts.fn);
  r.f1 = harmonic(r.precision, r.recall);
  return r;
}

EvalReport mention_metrics(const std::vector<LinkedMention>& pred,
                           const std::vector<GoldMention>& gold,
                           const DocIdSet* corpus_ids, MatchMode mode) {
  check_known(pred, corpus_ids);
  const auto [p, g] = group(pred, gold);
  Counts total;
  std::size_t gold_found = 0;
  std::map<std::string, Counts> per_doc;
  for (const std::string& doc : all_docs(p, g, corpus_ids)) {
    const auto& preds = find_or_empty(p, doc);
    const auto& golds = find_or_empty(g, doc);
    Counts c;
    if (mode == MatchMode::kOneToOne) {
      std::vector<bool> used(golds.size(), false);
      for (const Interval& m : preds) {
        bool matched = false;
        for (std::size_t i = 0; i < golds.size(); ++i) {
          if (!used[i] && golds[i].concept_id == m.concept_id &&
              overlaps(m.start, m.end, golds[i].start, golds[i].end)) {
            used[i] = true;
            matched = true;
            break;
          }
        }
        ++(matched ? c.tp : c.fp);
      }
      c.fn = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
      gold_found += golds.size() - c.fn;
    } else {
      const auto hit = [](const Interval& a, const std::vector<Interval>& others) {
        return std::any_of(others.begin(), others.end(), [&](const Interval& o) {
          return o.concept_id == a.concept_id &&
                 overlaps(a.start, a.end, o.start, o.end);
        });
      };
      for (const Interval& m : preds) ++(hit(m, golds) ? c.tp : c.fp);
      for (const Interval& m : golds) {
        if (hit(m, preds)) {
          ++gold_found;
        } else {
          ++c.fn;
        }
      }
    }
    per_doc[doc] = c;
    total += c;
  }
  EvalReport r = make_report(EvalLevel::kMention, total);
  if (mode == MatchMode::kAnyOverlap) {
    // Prediction-side and gold-side hits differ when matching is not
    // one-to-one; recall counts found gold mentions.
    r.recall = ratio(gold_found, gold_found + total.fn);
    r.f1 = harmonic(r.precision, r.recall);
  }
  r.per_document = std::move(per_doc);
  return r;
}

EvalReport document_metrics(const std::vector<LinkedMention>& pred,
                            const std::vector<GoldMention>& gold,
                            const DocIdSet* corpus_ids) {
  check_known(pred, corpus_ids);
  const auto [p, g] = group(pred, gold);
  Counts total;
  std::map<std::string, Counts> per_doc;
  for (const std::string& doc : all_docs(p, g, corpus_ids)) {
    std::set<std::string_view> ps, gs;
    for (const Interval& m : find_or_empty(p, doc)) ps.insert(m.concept_id);
    for (const Interval& m : find_or_empty(g, doc)) gs.insert(m.concept_id);
    Counts c;
    for (std::string_view id : ps) ++(gs.contains(id) ? c.tp : c.fp);
    for (std::string_view id : gs) {
      if (!ps.contains(id)) ++c.fn;
    }
    per_doc[doc] = c;
    total += c;
  }
  EvalReport r = make_report(EvalLevel::kDocument, total);
  r.per_document = std::move(per_doc);
  return r;
}

std::vector<GoldMention> load_gold(std::istream& in) {
  std::vector<GoldMention> gold;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty() || raw.front() == '#') continue;
    const auto cols = split(raw, '\t');
    if (cols.size() != 4) {
      throw ParseError("gold rows need doc_id<TAB>start<TAB>end<TAB>concept_id",
                       line_no);
    }
    GoldMention m;
    m.doc_id = std::string(trim(cols[0]));
    m.start = parse_offset(cols[1], line_no);
    m.end = parse_offset(cols[2], line_no);
    m.concept_id = std::string(trim(cols[3]));
    if (m.doc_id.empty() || m.concept_id.empty()) {
      throw ParseError("gold row has an empty doc_id or concept_id", line_no);
    }
    if (m.end <= m.start) {
      throw ParseError("gold row has end <= start", line_no);
    }
    gold.push_back(std::move(m));
  }
  return gold;
}

std::vector<GoldMention> load_gold_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open gold file: " + path);
  return load_gold(in);
}

GoldValidation validate_gold(const std::vector<GoldMention>& gold,
                             const Corpus* corpus, const Ontology* ontology) {
  GoldValidation v;
  std::set<std::string> unknown_docs, unknown_concepts;
  for (const GoldMention& m : gold) {
    if (corpus != nullptr) {
      const Document* doc = corpus->find(m.doc_id);
      if (doc == nullptr) {
        unknown_docs.insert(m.doc_id);
      } else if (m.end > doc->text.length()) {
        v.out_of_range.push_back(m.doc_id + ":" + std::to_string(m.start) + "-" +
                                 std::to_string(m.end));
      }
    }
    if (ontology != nullptr) {
      const Concept* c = ontology->find(m.concept_id);
      if (c == nullptr || c->obsolete) unknown_concepts.insert(m.concept_id);
    }
  }
  v.unknown_documents.assign(unknown_docs.begin(), unknown_docs.end());
  v.unknown_concepts.assign(unknown_concepts.begin(), unknown_concepts.end());
  return v;
}

std::string reports_to_json(const EvalReport& mention, const EvalReport& document,
                            const GoldValidation* validation, bool per_document,
                            MatchMode mode) {
  nlohmann::ordered_json j;
  j["match_mode"] = to_string(mode);
  j["mention"] = report_json(mention);
  j["document"] = report_json(document);
  if (per_document) {
    nlohmann::ordered_json docs = nlohmann::ordered_json::object();
    for (const auto& [doc, c] : mention.per_document) {
      docs[doc]["mention"] = counts_json(c);
    }
    for (const auto& [doc, c] : document.per_document) {
      docs[doc]["document"] = counts_json(c);
    }
    j["per_document"] = docs;
  }
  if (validation != nullptr) j["validation"] = validation_json(*validation);
  return j.dump(2) + "\n";
}

std::string reports_to_text(const EvalReport& mention, const EvalReport& document,
                            const GoldValidation* validation, bool per_document) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-10s %7s %7s %7s %10s %10s %10s\n", "level",
                "tp", "fp", "fn", "precision", "recall", "f1");
  out << line;
  for (const EvalReport* r : {&mention, &document}) {
    std::snprintf(line, sizeof(line), "%-10s %7zu %7zu %7zu %10.4f %10.4f %10.4f\n",
                  std::string(to_string(r->level)).c_str(), r->counts.tp,
                  r->counts.fp, r->counts.fn, r->precision, r->recall, r->f1);
    out << line;
  }
  if (per_document) {
    out << "\nper document (mention tp/fp/fn | document tp/fp/fn)\n";
    for (const auto& [doc, c] : mention.per_document) {
      Counts d;
      if (auto it = document.per_document.find(doc); it != document.per_document.end()) {
        d = it->second;
      }
      std::snprintf(line, sizeof(line), "  %-24s %5zu %5zu %5zu | %5zu %5zu %5zu\n",
                    doc.c_str(), c.tp, c.fp, c.fn, d.tp, d.fp, d.fn);
      out << line;
    }
  }
  if (validation != nullptr && !validation->ok()) {
    out << "\nvalidation\n";
    for (const auto& d : validation->unknown_documents) {
      out << "  unknown document: " << d << "\n";
    }
    for (const auto& r : validation->out_of_range) {
      out << "  offsets beyond document: " << r << "\n";
    }
    for (const auto& c : validation->unknown_concepts) {
      out << "  concept not in ontology: " << c << "\n";
    }
  }
  return out.str();
}

}  // namespace conrec
