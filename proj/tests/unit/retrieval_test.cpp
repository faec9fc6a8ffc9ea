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

#include "conrec/retrieval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "conrec/error.hpp"
#include "test_support.hpp"

namespace conrec {
namespace {

Ontology parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_obo(in);
}

constexpr std::string_view kThree =
    "[Term]\nid: C:1\nname: Umbilical hernia\nsynonym: \"Umbilical herniation\" EXACT []\n\n"
    "[Term]\nid: C:2\nname: Seizure\nsynonym: \"Epileptic seizure\" EXACT []\n\n"
    "[Term]\nid: C:3\nname: Microcephaly\n";

// Full scan: score every entry, keep each concept's maximum, sort by
// (score desc, id asc), cut at k.
std::vector<Candidate> oracle_top_k(const ConceptIndex& index, const std::vector<double>& q,
                                    std::size_t k) {
  std::map<std::string, Candidate> best;
  for (std::size_t i = 0; i < index.size(); ++i) {
    double s = 0.0;
    const auto row = index.vector(i);
    for (std::size_t d = 0; d < q.size(); ++d) s += row[d] * q[d];
    const auto& e = index.entries()[i];
    auto it = best.find(e.concept_id);
    if (it == best.end() || s > it->second.score) best[e.concept_id] = {e.concept_id, e.alias, s};
  }
  std::vector<Candidate> all;
  for (auto& [id, c] : best) all.push_back(c);
  std::sort(all.begin(), all.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.concept_id < b.concept_id;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

// Index over 2-d unit vectors at the given angles, one concept each.
ConceptIndex planar_index(const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  std::vector<IndexEntry> entries;
  std::vector<double> vectors;
  for (const auto& [id, v] : rows) {
    entries.push_back({id + " alias", id, AliasKind::kName});
    vectors.insert(vectors.end(), v.begin(), v.end());
  }
  return ConceptIndex(entries, vectors, rows.front().second.size(), "planar", "");
}

std::vector<double> scoring(double s) { return {s, std::sqrt(1.0 - s * s)}; }

TEST(BuildIndexTest, OneEntryPerAlias) {
  const Ontology o = parse(kThree);
  MockEmbedder m(32, 7);
  const ConceptIndex idx = build_index(o, m);
  EXPECT_EQ(idx.size(), 5u);
  const auto aliases = alias_list(o);
  ASSERT_EQ(aliases.size(), idx.size());
  for (std::size_t i = 0; i < aliases.size(); ++i) {
    EXPECT_EQ(idx.entries()[i].alias, aliases[i].text);
    EXPECT_EQ(idx.entries()[i].concept_id, aliases[i].concept_id);
    EXPECT_NEAR(l2_norm(idx.vector(i)), 1.0, 1e-6);
  }
  EXPECT_EQ(idx.concept_ids(), (std::vector<std::string>{"C:1", "C:2", "C:3"}));
  EXPECT_EQ(idx.ontology_label(), o.source_label());
}

TEST(BuildIndexTest, RebuildIsBitIdentical) {
  const Ontology o = testing::synthetic_ontology(100, 3, 2);
  MockEmbedder m(64, 7);
  const ConceptIndex a = build_index(o, m, 17);
  const ConceptIndex b = build_index(o, m, 256);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.content_hash(), b.content_hash());
  EXPECT_EQ(a.raw_vectors(), b.raw_vectors());
}

TEST(BuildIndexTest, PersistAndReload) {
  const Ontology o = parse(kThree);
  MockEmbedder m(32, 7);
  const ConceptIndex idx = build_index(o, m);
  testing::TempDir dir;
  const auto path = (dir / "index.bin").string();
  idx.save_file(path);
  const ConceptIndex back = ConceptIndex::load_file(path);
  EXPECT_EQ(back, idx);
  EXPECT_EQ(back.entries(), idx.entries());
  EXPECT_EQ(back.raw_vectors(), idx.raw_vectors());
  EXPECT_EQ(back.source_fingerprint(), index_source_fingerprint(alias_list(o), m));

  const auto header = ConceptIndex::read_header_file(path);
  EXPECT_EQ(header.version, ConceptIndex::kFormatVersion);
  EXPECT_EQ(header.dimension, 32u);
  EXPECT_EQ(header.entry_count, 5u);
  EXPECT_EQ(header.content_hash, idx.content_hash());
  EXPECT_EQ(header.ontology_label, idx.ontology_label());
}

TEST(BuildIndexTest, CorruptFilesRejected) {
  MockEmbedder m(16, 7);
  const ConceptIndex idx = build_index(parse(kThree), m);
  std::stringstream buf;
  idx.save(buf);
  const std::string good = buf.str();

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  std::string truncated = good.substr(0, good.size() - 9);
  std::string flipped = good;
  flipped[flipped.size() - 3] ^= 0x01;  // inside the last vector
  std::string version = good;
  version[8] = 9;
  for (const std::string& bytes : {bad_magic, truncated, flipped, version}) {
    std::istringstream in(bytes);
    EXPECT_THROW(ConceptIndex::load(in), IndexFormatError);
  }
  std::istringstream ok(good);
  EXPECT_EQ(ConceptIndex::load(ok), idx);
}

TEST(BuildIndexTest, ExportMatchesVectorFileFormat) {
  MockEmbedder m(8, 7);
  const ConceptIndex idx = build_index(parse(kThree), m);
  std::stringstream buf;
  idx.export_vectors(buf);
  FileEmbedder f = FileEmbedder::load(buf);
  EXPECT_EQ(f.size(), idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto v = f.embed(idx.entries()[i].alias);
    for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(v.values[d], idx.vector(i)[d], 1e-15);
  }
}

TEST(BuildIndexTest, BackendErrorNamesBatch) {
  std::istringstream in("dim=2\numbilical hernia\t1,0\n");
  FileEmbedder partial = FileEmbedder::load(in);
  try {
    build_index(parse(kThree), partial, 2);
    FAIL();
  } catch (const Error& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("batch"), std::string::npos) << what;
  }
}

TEST(BuildIndexTest, EmptyOntologyRejected) {
  MockEmbedder m(8, 7);
  EXPECT_THROW(build_index(Ontology(), m), Error);
}

TEST(TopKTest, ExactAliasScoresOne) {
  const Ontology o = parse(kThree);
  MockEmbedder m(256, 7);
  const ConceptIndex idx = build_index(o, m);
  const auto top = top_k_concepts(idx, m.embed("epileptic seizure").values, 5);
  ASSERT_FALSE(top.empty());
  EXPECT_EQ(top[0].concept_id, "C:2");
  EXPECT_EQ(top[0].best_alias, "epileptic seizure");
  EXPECT_NEAR(top[0].score, 1.0, 1e-6);
}

TEST(TopKTest, SaturatesAtConceptCount) {
  MockEmbedder m(64, 7);
  const ConceptIndex idx = build_index(parse(kThree), m);
  const auto top = top_k_concepts(idx, m.embed("hernia").values, 50);
  EXPECT_EQ(top.size(), 3u);
}

TEST(TopKTest, TieBreaksBySmallerId) {
  const ConceptIndex idx =
      planar_index({{"B:2", {1.0, 0.0}}, {"A:9", {1.0, 0.0}}, {"C:1", {0.0, 1.0}}});
  const auto top = top_k_concepts(idx, std::vector<double>{1.0, 0.0}, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].concept_id, "A:9");
  EXPECT_EQ(top[1].concept_id, "B:2");
}

TEST(TopKTest, DimensionMismatch) {
  const ConceptIndex idx = planar_index({{"A", {1.0, 0.0}}});
  EXPECT_THROW(top_k_concepts(idx, std::vector<double>{1.0, 0.0, 0.0}, 1), Error);
}

TEST(TopKTest, FiftyAliasOracle) {
  const Ontology o = testing::synthetic_ontology(17, 3, 9);
  ASSERT_EQ(alias_list(o).size(), 51u);
  MockEmbedder m(128, 7);
  const ConceptIndex idx = build_index(o, m);
  for (const char* q : {"small renal cyst", "hernia", "bone defect severe", "t3a1", "valve"}) {
    const auto v = m.embed(q).values;
    for (std::size_t k : {1u, 3u, 5u, 17u, 40u}) {
      const auto got = top_k_concepts(idx, v, k);
      const auto want = oracle_top_k(idx, v, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].concept_id, want[i].concept_id) << q << " k=" << k;
        EXPECT_NEAR(got[i].score, want[i].score, 1e-9);
      }
    }
  }
}

TEST(DecideTest, DefaultThresholdExamples) {
  const ConceptIndex idx = planar_index({{"E:1", {1.0, 0.0}}, {"E:2", {0.0, 1.0}}});
  const Thresholds th;  // 0.95 / 0.85 / 5
  EXPECT_EQ(decide(idx, scoring(0.96), th).kind, DecisionKind::kDirect);
  const auto amb = decide(idx, scoring(0.90), th);
  EXPECT_EQ(amb.kind, DecisionKind::kAmbiguous);
  EXPECT_LE(amb.candidates.size(), 5u);
  EXPECT_EQ(decide(idx, scoring(0.80), th).kind, DecisionKind::kNoMatch);
}

TEST(DecideTest, HalfOpenBandBoundaries) {
  const ConceptIndex idx = planar_index({{"E:1", {1.0, 0.0}}});
  const Thresholds th;
  EXPECT_EQ(decide(idx, std::vector<double>{0.95, 0.0}, th).kind, DecisionKind::kDirect);
  EXPECT_EQ(decide(idx, std::vector<double>{0.85, 0.0}, th).kind, DecisionKind::kAmbiguous);
  EXPECT_EQ(decide(idx, std::vector<double>{std::nextafter(0.95, 0.0), 0.0}, th).kind,
            DecisionKind::kAmbiguous);
  EXPECT_EQ(decide(idx, std::vector<double>{std::nextafter(0.85, 0.0), 0.0}, th).kind,
            DecisionKind::kNoMatch);
}

TEST(DecideTest, DirectCarriesOneCandidate) {
  const ConceptIndex idx = planar_index({{"E:1", {1.0, 0.0}}, {"E:2", scoring(0.99)}});
  const auto d = decide(idx, std::vector<double>{1.0, 0.0}, Thresholds{});
  ASSERT_EQ(d.kind, DecisionKind::kDirect);
  ASSERT_EQ(d.candidates.size(), 1u);
  EXPECT_EQ(d.candidates[0].concept_id, "E:1");
}

TEST(DecideTest, AmbiguousKeepsOnlyBandAndK) {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  const double scores[] = {0.94, 0.93, 0.92, 0.91, 0.90, 0.89, 0.88, 0.80};
  for (int i = 0; i < 8; ++i) rows.push_back({"E:" + std::to_string(i), scoring(scores[i])});
  const ConceptIndex idx = planar_index(rows);
  auto d = decide(idx, std::vector<double>{1.0, 0.0}, Thresholds{0.95, 0.85, 5});
  ASSERT_EQ(d.kind, DecisionKind::kAmbiguous);
  ASSERT_EQ(d.candidates.size(), 5u);
  EXPECT_EQ(d.candidates.front().concept_id, "E:0");
  d = decide(idx, std::vector<double>{1.0, 0.0}, Thresholds{0.95, 0.905, 10});
  ASSERT_EQ(d.candidates.size(), 4u);
  for (const auto& c : d.candidates) EXPECT_GE(c.score, 0.905);
}

TEST(DecideTest, EmptyIndexIsNoMatch) {
  const ConceptIndex idx({}, {}, 2, "empty", "");
  const auto d = decide(idx, std::vector<double>{1.0, 0.0}, Thresholds{});
  EXPECT_EQ(d.kind, DecisionKind::kNoMatch);
  EXPECT_TRUE(d.candidates.empty());
}

TEST(ThresholdsTest, Validation) {
  EXPECT_NO_THROW(Thresholds{}.validate());
  EXPECT_THROW((Thresholds{0.85, 0.85, 5}.validate()), Error);
  EXPECT_THROW((Thresholds{0.9, 0.95, 5}.validate()), Error);
  EXPECT_THROW((Thresholds{1.1, 0.5, 5}.validate()), Error);
  EXPECT_THROW((Thresholds{0.9, -0.1, 5}.validate()), Error);
  EXPECT_THROW((Thresholds{0.9, 0.5, 0}.validate()), Error);
}

// Synonyms of one concept never show up twice, and the decision invariants
// hold for every query; raising tau1 or lowering tau2 moves decisions only in
// the allowed direction.
TEST(DecidePropertyTest, InvariantsAndMonotonicity) {
  const Ontology o = testing::synthetic_ontology(60, 4, 4);
  MockEmbedder m(48, 3);
  const ConceptIndex idx = build_index(o, m);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto aliases = alias_list(o);
  for (int i = 0; i < 300; ++i) {
    std::string q = aliases[rng() % aliases.size()].text;
    if (i % 3 == 0) q += " severe";
    if (i % 5 == 0) q = q.substr(0, q.rfind(' '));
    const auto v = m.embed(q).values;
    double t2 = u(rng) * 0.8;
    double t1 = t2 + 0.01 + u(rng) * (0.99 - t2);
    const Thresholds th{t1, t2, 1 + rng() % 6};
    const auto d = decide(idx, v, th);
    std::set<std::string> seen;
    for (const auto& c : d.candidates) EXPECT_TRUE(seen.insert(c.concept_id).second);
    switch (d.kind) {
      case DecisionKind::kDirect:
        ASSERT_EQ(d.candidates.size(), 1u);
        EXPECT_GE(d.candidates[0].score, t1);
        break;
      case DecisionKind::kAmbiguous:
        ASSERT_GE(d.candidates.size(), 1u);
        EXPECT_LE(d.candidates.size(), th.k);
        for (std::size_t j = 0; j < d.candidates.size(); ++j) {
          EXPECT_GE(d.candidates[j].score, t2);
          EXPECT_LT(d.candidates[j].score, t1);
          if (j > 0) {
            EXPECT_GE(d.candidates[j - 1].score, d.candidates[j].score);
          }
        }
        break;
      case DecisionKind::kNoMatch:
        EXPECT_TRUE(d.candidates.empty());
        EXPECT_LT(d.best_score, t2);
        break;
    }
    const Thresholds higher{std::min(1.0, t1 + 0.05), t2, th.k};
    if (d.kind == DecisionKind::kNoMatch) {
      EXPECT_NE(decide(idx, v, higher).kind, DecisionKind::kDirect);
    }
    const Thresholds lower{t1, std::max(0.0, t2 - 0.05), th.k};
    if (d.kind == DecisionKind::kAmbiguous) {
      const auto dl = decide(idx, v, lower);
      ASSERT_EQ(dl.kind, DecisionKind::kAmbiguous);
      for (const auto& c : d.candidates) {
        EXPECT_TRUE(std::any_of(dl.candidates.begin(), dl.candidates.end(),
                                [&](const Candidate& x) { return x.concept_id == c.concept_id; }));
      }
    }
  }
}

TEST(QueryTest, BatchMatchesSingle) {
  const Ontology o = parse(kThree);
  MockEmbedder m(128, 7);
  const ConceptIndex idx = build_index(o, m);
  std::vector<EntitySpan> spans;
  for (const char* t : {"umbilical hernia", "small umbilical hernia", "febrile seizure"}) {
    spans.push_back({"d", 0, 1, t, Strategy::kRuleBased});
  }
  const Thresholds th{0.95, 0.5, 5};
  const auto batch = query_batch(idx, spans, m, th);
  ASSERT_EQ(batch.size(), 3u);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    const auto single = query(idx, spans[i], m, th);
    EXPECT_EQ(batch[i].kind, single.kind);
    EXPECT_EQ(batch[i].candidates, single.candidates);
  }
  EXPECT_EQ(batch[0].kind, DecisionKind::kDirect);
}

}  // namespace
}  // namespace conrec
