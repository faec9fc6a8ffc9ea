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
#ifndef CONREC_EVALUATION_HPP_
#define CONREC_EVALUATION_HPP_

#include <istream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "conrec/corpus.hpp"
#include "conrec/linking.hpp"
#include "conrec/ontology.hpp"

namespace conrec {

struct GoldMention {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string concept_id;

  bool operator==(const GoldMention&) const = default;
};

enum class EvalLevel { kMention, kDocument };

// kOneToOne consumes each gold mention at most once. kAnyOverlap counts a
// prediction correct when any same-concept gold mention overlaps it, and a
// gold mention found when any prediction overlaps it.
enum class MatchMode { kOneToOne, kAnyOverlap };

std::string_view to_string(EvalLevel level);
std::string_view to_string(MatchMode mode);
MatchMode match_mode_from_string(std::string_view s);

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts&) const = default;
};

struct EvalReport {
  EvalLevel level = EvalLevel::kMention;
  Counts counts;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::map<std::string, Counts> per_document;
};

// P, R, F1 from micro-summed counts; each is 0 when its denominator is 0.
EvalReport make_report(EvalLevel level, const Counts& counts);

using DocIdSet = std::set<std::string, std::less<>>;

// corpus_ids, when non-null, is the set of known documents; a prediction for
// any other document throws Error.
EvalReport mention_metrics(const std::vector<LinkedMention>& pred,
                           const std::vector<GoldMention>& gold,
                           const DocIdSet* corpus_ids = nullptr,
                           MatchMode mode = MatchMode::kOneToOne);
EvalReport document_metrics(const std::vector<LinkedMention>& pred,
                            const std::vector<GoldMention>& gold,
                            const DocIdSet* corpus_ids = nullptr);

// TSV doc_id<TAB>start<TAB>end<TAB>concept_id. Blank and '#' lines skipped.
// Throws ParseError with the line number for malformed rows or end <= start.
std::vector<GoldMention> load_gold(std::istream& in);
std::vector<GoldMention> load_gold_file(const std::string& path);

struct GoldValidation {
  std::vector<std::string> unknown_documents;
  std::vector<std::string> out_of_range;
  std::vector<std::string> unknown_concepts;

  bool ok() const {
    return unknown_documents.empty() && out_of_range.empty() &&
           unknown_concepts.empty();
  }
};

// Problems are listed, never dropped: the gold rows stay in scoring.
GoldValidation validate_gold(const std::vector<GoldMention>& gold,
                             const Corpus* corpus, const Ontology* ontology);

std::string reports_to_json(const EvalReport& mention,
                            const EvalReport& document,
                            const GoldValidation* validation,
                            bool per_document, MatchMode mode);
std::string reports_to_text(const EvalReport& mention,
                            const EvalReport& document,
                            const GoldValidation* validation,
                            bool per_document);

}  // namespace conrec

#endif  // CONREC_EVALUATION_HPP_
