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

#include <gtest/gtest.h>

#include <json.hpp>

#include <random>
#include <sstream>

#include "conrec/error.hpp"
#include "test_support.hpp"

namespace conrec {
namespace {

LinkedMention pred(std::string doc, std::size_t s, std::size_t e, std::string id) {
  LinkedMention m;
  m.span = EntitySpan{std::move(doc), s, e, "", Strategy::kRuleBased};
  m.concept_id = std::move(id);
  m.score = 1.0;
  return m;
}

GoldMention gold(std::string doc, std::size_t s, std::size_t e, std::string id) {
  return {std::move(doc), s, e, std::move(id)};
}

std::vector<LinkedMention> as_pred(const std::vector<GoldMention>& g) {
  std::vector<LinkedMention> out;
  for (const auto& m : g) out.push_back(pred(m.doc_id, m.start, m.end, m.concept_id));
  return out;
}

TEST(MentionMetricsTest, HalfCase) {
  const auto r = mention_metrics({pred("d", 0, 5, "A"), pred("d", 10, 15, "B")},
                                 {gold("d", 0, 5, "A"), gold("d", 20, 25, "C")});
  EXPECT_EQ(r.counts, (Counts{1, 1, 1}));
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
}

TEST(MentionMetricsTest, ShiftedOffsetsStillMatch) {
  const auto r = mention_metrics({pred("d", 2, 12, "A")}, {gold("d", 0, 10, "A")});
  EXPECT_EQ(r.counts, (Counts{1, 0, 0}));
}

TEST(MentionMetricsTest, TouchingOrOtherConceptDoesNotMatch) {
  EXPECT_EQ(mention_metrics({pred("d", 10, 12, "A")}, {gold("d", 0, 10, "A")}).counts,
            (Counts{0, 1, 1}));
  EXPECT_EQ(mention_metrics({pred("d", 0, 10, "B")}, {gold("d", 0, 10, "A")}).counts,
            (Counts{0, 1, 1}));
  EXPECT_EQ(mention_metrics({pred("e", 0, 10, "A")}, {gold("d", 0, 10, "A")}).counts,
            (Counts{0, 1, 1}));
}

TEST(MentionMetricsTest, GoldConsumedOnce) {
  const std::vector<LinkedMention> p = {pred("d", 0, 8, "A"), pred("d", 2, 6, "A")};
  const std::vector<GoldMention> g = {gold("d", 0, 6, "A")};
  EXPECT_EQ(mention_metrics(p, g).counts, (Counts{1, 1, 0}));
  const auto any = mention_metrics(p, g, nullptr, MatchMode::kAnyOverlap);
  EXPECT_EQ(any.counts, (Counts{2, 0, 0}));
  EXPECT_DOUBLE_EQ(any.precision, 1.0);
  EXPECT_DOUBLE_EQ(any.recall, 1.0);
}

TEST(MentionMetricsTest, AnyOverlapRecallCountsGoldSide) {
  // One wide prediction covers two gold mentions.
  const auto r = mention_metrics({pred("d", 0, 20, "A")},
                                 {gold("d", 0, 5, "A"), gold("d", 10, 15, "A"),
                                  gold("d", 30, 35, "A")},
                                 nullptr, MatchMode::kAnyOverlap);
  EXPECT_DOUBLE_EQ(r.precision, 1.0);
  EXPECT_DOUBLE_EQ(r.recall, 2.0 / 3.0);
  EXPECT_EQ(r.counts.fn, 1u);
}

TEST(MentionMetricsTest, UnknownDocumentIsError) {
  const DocIdSet ids{"d1", "d2"};
  EXPECT_THROW(mention_metrics({pred("d3", 0, 1, "A")}, {}, &ids), Error);
  EXPECT_THROW(document_metrics({pred("d3", 0, 1, "A")}, {}, &ids), Error);
  EXPECT_NO_THROW(mention_metrics({pred("d1", 0, 1, "A")}, {}, &ids));
}

TEST(MentionMetricsTest, PerDocumentCountsSumToTotal) {
  const auto r = mention_metrics({pred("a", 0, 5, "A"), pred("b", 0, 5, "B")},
                                 {gold("a", 0, 5, "A"), gold("b", 9, 12, "B")});
  ASSERT_EQ(r.per_document.size(), 2u);
  EXPECT_EQ(r.per_document.at("a"), (Counts{1, 0, 0}));
  EXPECT_EQ(r.per_document.at("b"), (Counts{0, 1, 1}));
}

TEST(DocumentMetricsTest, SetArithmetic) {
  const auto r = document_metrics({pred("d", 0, 1, "A"), pred("d", 5, 6, "B")},
                                  {gold("d", 30, 31, "B"), gold("d", 40, 41, "C")});
  EXPECT_EQ(r.counts, (Counts{1, 1, 1}));
}

TEST(DocumentMetricsTest, DuplicatesCountedOnce) {
  const auto r = document_metrics({pred("d", 0, 1, "A"), pred("d", 5, 6, "A")},
                                  {gold("d", 0, 1, "A")});
  EXPECT_EQ(r.counts, (Counts{1, 0, 0}));
}

TEST(DocumentMetricsTest, MicroAverageThreeQuarters) {
  // d1: TP=1, FP=0, FN=1.  d2: TP=2, FP=1, FN=0.
  const auto r = document_metrics(
      {pred("d1", 0, 1, "A"), pred("d2", 0, 1, "A"), pred("d2", 0, 1, "B"),
       pred("d2", 0, 1, "C")},
      {gold("d1", 0, 1, "A"), gold("d1", 0, 1, "B"), gold("d2", 0, 1, "A"),
       gold("d2", 0, 1, "B")});
  EXPECT_EQ(r.per_document.at("d1"), (Counts{1, 0, 1}));
  EXPECT_EQ(r.per_document.at("d2"), (Counts{2, 1, 0}));
  EXPECT_EQ(r.counts, (Counts{3, 1, 1}));
  EXPECT_DOUBLE_EQ(r.precision, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.recall, 3.0 / 4.0);
  EXPECT_DOUBLE_EQ(r.f1, 3.0 / 4.0);
}

TEST(MakeReportTest, ZeroDenominators) {
  const auto r = make_report(EvalLevel::kMention, Counts{});
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  const auto j = nlohmann::json::parse(reports_to_json(r, r, nullptr, false, MatchMode::kOneToOne));
  EXPECT_EQ(j["mention"]["zero_denominator"],
            nlohmann::json::array({"precision", "recall", "f1"}));
  const auto ok = make_report(EvalLevel::kMention, Counts{1, 0, 0});
  const auto k = nlohmann::json::parse(reports_to_json(ok, ok, nullptr, true, MatchMode::kOneToOne));
  EXPECT_TRUE(k["mention"]["zero_denominator"].empty());
  EXPECT_EQ(k["match_mode"], "one_to_one");
}

TEST(ReportTextTest, MentionsBothLevels) {
  const auto m = make_report(EvalLevel::kMention, Counts{1, 1, 1});
  const auto d = make_report(EvalLevel::kDocument, Counts{3, 1, 1});
  const std::string text = reports_to_text(m, d, nullptr, false);
  EXPECT_NE(text.find("mention"), std::string::npos);
  EXPECT_NE(text.find("document"), std::string::npos);
  EXPECT_NE(text.find("0.5"), std::string::npos);
  EXPECT_NE(text.find("0.75"), std::string::npos);
}

std::vector<GoldMention> random_gold(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n(0, 12), doc(0, 2), start(0, 40), len(1, 8), cid(0, 3);
  std::vector<GoldMention> out(static_cast<std::size_t>(n(rng)));
  for (auto& m : out) {
    const auto s = static_cast<std::size_t>(start(rng));
    m = gold("d" + std::to_string(doc(rng)), s, s + static_cast<std::size_t>(len(rng)),
             std::string(1, static_cast<char>('A' + cid(rng))));
  }
  return out;
}

TEST(MetricsProperties, SelfScoringIsPerfect) {
  std::mt19937_64 rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto g = random_gold(rng);
    if (g.empty()) continue;
    for (const auto& r : {mention_metrics(as_pred(g), g), document_metrics(as_pred(g), g)}) {
      EXPECT_DOUBLE_EQ(r.precision, 1.0);
      EXPECT_DOUBLE_EQ(r.recall, 1.0);
      EXPECT_DOUBLE_EQ(r.f1, 1.0);
    }
  }
}

TEST(MetricsProperties, SwapExchangesPrecisionAndRecall) {
  std::mt19937_64 rng(12);
  for (int t = 0; t < 1000; ++t) {
    const auto a = random_gold(rng);
    const auto b = random_gold(rng);
    SCOPED_TRACE(t);
    const auto m1 = mention_metrics(as_pred(a), b);
    const auto m2 = mention_metrics(as_pred(b), a);
    EXPECT_EQ(m1.precision, m2.recall);
    EXPECT_EQ(m1.recall, m2.precision);
    EXPECT_DOUBLE_EQ(m1.f1, m2.f1);
    const auto d1 = document_metrics(as_pred(a), b);
    const auto d2 = document_metrics(as_pred(b), a);
    EXPECT_EQ(d1.precision, d2.recall);
    EXPECT_EQ(d1.recall, d2.precision);
    EXPECT_DOUBLE_EQ(d1.f1, d2.f1);
  }
}

TEST(MetricsProperties, MentionTpBoundedPerDocument) {
  std::mt19937_64 rng(13);
  for (int t = 0; t < 500; ++t) {
    const auto a = as_pred(random_gold(rng));
    const auto b = random_gold(rng);
    for (const auto& [doc, c] : mention_metrics(a, b).per_document) {
      const auto np = static_cast<std::size_t>(
          std::count_if(a.begin(), a.end(), [&](const auto& m) { return m.span.doc_id == doc; }));
      const auto ng = static_cast<std::size_t>(
          std::count_if(b.begin(), b.end(), [&](const auto& m) { return m.doc_id == doc; }));
      EXPECT_LE(c.tp, std::min(np, ng));
      EXPECT_EQ(c.tp + c.fp, np);
      EXPECT_EQ(c.tp + c.fn, ng);
    }
  }
}

TEST(MetricsProperties, DocumentLevelIgnoresOffsetsAndDuplicates) {
  std::mt19937_64 rng(14);
  for (int t = 0; t < 300; ++t) {
    auto p = as_pred(random_gold(rng));
    const auto g = random_gold(rng);
    const auto base = document_metrics(p, g);
    auto moved = p;
    for (auto& m : moved) {
      m.span.start += 100;
      m.span.end += 107;
    }
    const std::size_t n = moved.size();
    for (std::size_t i = 0; i < n; ++i) moved.push_back(moved[i]);
    const auto r = document_metrics(moved, g);
    EXPECT_EQ(r.counts, base.counts);
  }
}

TEST(LoadGoldTest, Examples) {
  std::istringstream empty("");
  EXPECT_TRUE(load_gold(empty).empty());
  const auto rows = load_gold_file(testing::fixture("e2e/gold.tsv").string());
  EXPECT_EQ(rows.size(), 5u);
  std::istringstream in("# comment\n\nd1\t3\t9\tHP:1\n");
  EXPECT_EQ(load_gold(in), (std::vector<GoldMention>{gold("d1", 3, 9, "HP:1")}));
}

TEST(LoadGoldTest, ErrorsCarryLineNumber) {
  for (const char* bad : {"d\t5\t5\tA\n", "d\t6\t5\tA\n", "d\t1\t2\n", "d\tx\t2\tA\n",
                          "d\t1\t2\tA\textra\n", "\t1\t2\tA\n"}) {
    std::istringstream in(std::string("d\t0\t1\tA\n") + bad);
    try {
      load_gold(in);
      ADD_FAILURE() << bad;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), 2u) << bad;
    }
  }
  EXPECT_THROW(load_gold_file("/nonexistent/gold.tsv"), Error);
}

TEST(ValidateGoldTest, ListsProblemsWithoutDropping) {
  Corpus corpus;
  corpus.documents.push_back({"d1", Text("short text")});
  const Ontology onto = parse_obo_file(testing::fixture("mini.obo").string());
  const std::vector<GoldMention> g = {gold("d1", 0, 5, "HP:0001250"), gold("d1", 5, 40, "HP:0001250"),
                                      gold("d9", 0, 1, "HP:0001250"), gold("d1", 0, 5, "HP:0000003"),
                                      gold("d1", 0, 5, "HP:7777777")};
  const auto v = validate_gold(g, &corpus, &onto);
  EXPECT_FALSE(v.ok());
  EXPECT_EQ(v.unknown_documents, std::vector<std::string>{"d9"});
  EXPECT_EQ(v.out_of_range, std::vector<std::string>{"d1:5-40"});
  EXPECT_EQ(v.unknown_concepts, (std::vector<std::string>{"HP:0000003", "HP:7777777"}));
  EXPECT_TRUE(validate_gold({g[0]}, &corpus, &onto).ok());
}

TEST(MatchModeTest, StringRoundTrip) {
  for (MatchMode m : {MatchMode::kOneToOne, MatchMode::kAnyOverlap}) {
    EXPECT_EQ(match_mode_from_string(to_string(m)), m);
  }
  EXPECT_THROW(match_mode_from_string("fuzzy"), Error);
}

}  // namespace
}  // namespace conrec
