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

#include "conrec/ontology.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <queue>
#include <regex>
#include <set>
#include <sstream>

#include "conrec/error.hpp"
#include "conrec/text.hpp"
#include "test_support.hpp"

namespace conrec {
namespace {

using testing::fixture;

Ontology parse(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_obo(in);
}

// Counts lines starting with `prefix`, the way `grep -c '^prefix'` would.
std::size_t grep_count(const std::string& path, const std::string& prefix) {
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += line.rfind(prefix, 0) == 0;
  return n;
}

TEST(OntologyTest, SingleStanzaTranscribed) {
  const Ontology o = parse("[Term]\nid: HP:0001631\nname: Atrial septal defect\n");
  ASSERT_EQ(o.size(), 1u);
  const Concept& c = o.at("HP:0001631");
  EXPECT_EQ(c.name, "Atrial septal defect");
  EXPECT_FALSE(c.definition);
  EXPECT_TRUE(c.synonyms.empty());
  EXPECT_TRUE(c.parents.empty());
  EXPECT_FALSE(c.obsolete);
}

TEST(OntologyTest, EmptyStream) {
  EXPECT_EQ(parse("").size(), 0u);
}

TEST(OntologyTest, MiniFixtureMatchesGrepOracle) {
  const std::string path = fixture("mini.obo").string();
  const Ontology o = parse_obo_file(path);
  EXPECT_EQ(o.size(), grep_count(path, "[Term]"));
  std::size_t synonyms = 0;
  std::size_t parents = 0;
  for (const auto& [id, c] : o.concepts()) {
    synonyms += c.synonyms.size();
    parents += c.parents.size();
  }
  EXPECT_EQ(synonyms, grep_count(path, "synonym:"));
  EXPECT_EQ(parents, grep_count(path, "is_a:"));
  EXPECT_EQ(o.source_label(), "hp hp/releases/2024-02-08");
}

TEST(OntologyTest, MiniFixtureFields) {
  const Ontology o = parse_obo_file(fixture("mini.obo").string());
  EXPECT_EQ(o.at("HP:0000707").definition, "An abnormality of the \"nervous system\".");
  EXPECT_EQ(o.at("HP:0001631").definition, "A defect in the interatrial septum.");
  const Concept& seizure = o.at("HP:0001250");
  ASSERT_EQ(seizure.synonyms.size(), 2u);
  EXPECT_EQ(seizure.synonyms[0].text, "Epileptic seizure");
  EXPECT_EQ(seizure.synonyms[0].scope, "EXACT");
  EXPECT_EQ(seizure.xrefs, std::vector<std::string>{"UMLS:C0036572"});
  EXPECT_EQ(o.at("HP:0001627").parents, std::vector<std::string>{"HP:0001626"});
  EXPECT_TRUE(o.at("HP:0000003").obsolete);
  EXPECT_FALSE(o.contains("part_of"));  // Typedef stanzas are ignored
}

TEST(OntologyTest, AllSynonymScopesIngested) {
  const Ontology o = parse(
      "[Term]\nid: X:1\nname: a\n"
      "synonym: \"b\" BROAD []\nsynonym: \"c\" NARROW []\nsynonym: \"d\" RELATED []\n");
  EXPECT_EQ(o.at("X:1").synonyms.size(), 3u);
}

TEST(OntologyTest, DuplicateSynonymsCollapsed) {
  const Ontology o = parse(
      "[Term]\nid: X:1\nname: a\nsynonym: \"Big  Heart\" EXACT []\n"
      "synonym: \"big heart\" RELATED []\n");
  EXPECT_EQ(o.at("X:1").synonyms.size(), 1u);
}

TEST(OntologyTest, MissingIdReportsLine) {
  try {
    parse("[Term]\nid: X:1\nname: a\n\n[Term]\nname: b\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 5u);
  }
}

TEST(OntologyTest, DuplicateIdNamed) {
  try {
    parse("[Term]\nid: X:1\nname: a\n\n[Term]\nid: X:1\nname: b\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("X:1"), std::string::npos);
  }
}

TEST(OntologyTest, LiveTermNeedsName) {
  EXPECT_THROW(parse("[Term]\nid: X:1\n"), ParseError);
  EXPECT_NO_THROW(parse("[Term]\nid: X:1\nis_obsolete: true\n"));
}

TEST(OntologyTest, RoundTripIsFieldForField) {
  Ontology o = parse_obo_file(fixture("mini.obo").string());
  std::ifstream sidecar(fixture("mini_xref.tsv"));
  o = attach_xref_synonyms(o, sidecar);
  std::ostringstream obo;
  write_obo(o, obo);
  std::ostringstream xref;
  write_xref_sidecar(o, xref);
  Ontology back = parse(obo.str());
  std::istringstream xin(xref.str());
  back = attach_xref_synonyms(back, xin);
  EXPECT_EQ(back, o);
}

TEST(OntologyTest, XrefSidecarDedupAndSkip) {
  const Ontology o = parse_obo_file(fixture("mini.obo").string());
  std::ifstream in(fixture("mini_xref.tsv"));
  std::size_t skipped = 0;
  const Ontology x = attach_xref_synonyms(o, in, &skipped);
  EXPECT_EQ(skipped, 1u);
  EXPECT_EQ(x.at("HP:0001250").xref_synonyms, std::vector<std::string>{"Epileptic fit"});
  EXPECT_EQ(x.at("HP:0001631").xref_synonyms.size(), 1u);
}

TEST(OntologyTest, XrefSidecarMalformedRow) {
  const Ontology o = parse("[Term]\nid: X:1\nname: a\n");
  std::istringstream in("X:1\tfine\nX:1 no tab\n");
  try {
    attach_xref_synonyms(o, in);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

// A <- B <- C chain under root R, D a sibling of A.
constexpr std::string_view kChain =
    "[Term]\nid: R\nname: root\n\n"
    "[Term]\nid: A\nname: a\nis_a: R\n\n"
    "[Term]\nid: B\nname: b\nis_a: A\n\n"
    "[Term]\nid: C\nname: c\nis_a: B\n\n"
    "[Term]\nid: D\nname: d\nis_a: R\n";

std::set<std::string> ids(const Ontology& o) {
  std::set<std::string> out;
  for (const auto& [id, c] : o.concepts()) out.insert(id);
  return out;
}

TEST(SubtreeFilterTest, LeafKeepsOnlyItself) {
  EXPECT_EQ(ids(subtree_filter(parse(kChain), "C")), (std::set<std::string>{"C"}));
}

TEST(SubtreeFilterTest, ChainReachability) {
  const Ontology f = subtree_filter(parse(kChain), "A");
  EXPECT_EQ(ids(f), (std::set<std::string>{"A", "B", "C"}));
  EXPECT_TRUE(f.at("A").parents.empty());  // R pruned
  EXPECT_EQ(f.root_id(), "A");
}

TEST(SubtreeFilterTest, ObsoleteExcluded) {
  std::string text(kChain);
  text.replace(text.find("id: C\nname: c\n"), 14, "id: C\nname: c\nis_obsolete: true\n");
  EXPECT_EQ(ids(subtree_filter(parse(text), "R")), (std::set<std::string>{"R", "A", "B", "D"}));
}

TEST(SubtreeFilterTest, UnknownRootNamed) {
  try {
    subtree_filter(parse(kChain), "Z:404");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("Z:404"), std::string::npos);
  }
}

TEST(SubtreeFilterTest, Idempotent) {
  const Ontology o = parse_obo_file(fixture("mini.obo").string());
  for (const char* root : {"HP:0000001", "HP:0000118", "HP:0001626", "HP:0001250"}) {
    const Ontology once = subtree_filter(o, root);
    EXPECT_EQ(subtree_filter(once, root), once) << root;
  }
}

// Reachability recomputed from the raw parent lists by a reverse-edge BFS.
TEST(SubtreeFilterTest, MatchesIndependentReachability) {
  const Ontology o = parse_obo_file(fixture("mini.obo").string());
  for (const auto& [root, rc] : o.concepts()) {
    if (rc.obsolete) continue;
    std::set<std::string> expect{root};
    std::queue<std::string> q;
    q.push(root);
    while (!q.empty()) {
      const std::string cur = q.front();
      q.pop();
      for (const auto& [id, c] : o.concepts()) {
        if (c.obsolete || expect.contains(id)) continue;
        for (const auto& p : c.parents) {
          if (p == cur) {
            expect.insert(id);
            q.push(id);
          }
        }
      }
    }
    const Ontology f = subtree_filter(o, root);
    EXPECT_EQ(ids(f), expect) << root;
    for (const auto& [id, c] : f.concepts()) {
      for (const auto& p : c.parents) EXPECT_TRUE(f.contains(p)) << id << " -> " << p;
    }
  }
}

TEST(AliasListTest, NameOnly) {
  const auto a = alias_list(parse("[Term]\nid: X:1\nname: Fever\n"));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].text, "fever");
  EXPECT_EQ(a[0].kind, AliasKind::kName);
}

TEST(AliasListTest, NamePlusSynonymsPlusXref) {
  Ontology o = parse(
      "[Term]\nid: X:1\nname: Fever\nsynonym: \"Pyrexia\" EXACT []\n"
      "synonym: \"High  temperature\" RELATED []\n");
  std::istringstream side("X:1\tHyperthermia\n");
  o = attach_xref_synonyms(o, side);
  const auto a = alias_list(o);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a[0].kind, AliasKind::kName);
  EXPECT_EQ(a[1].text, "high temperature");
  EXPECT_EQ(a[2].text, "pyrexia");
  EXPECT_EQ(a[3].kind, AliasKind::kXref);
}

TEST(AliasListTest, CountingOracleAndInvariants) {
  Ontology o = parse_obo_file(fixture("mini.obo").string());
  std::ifstream side(fixture("mini_xref.tsv"));
  o = attach_xref_synonyms(o, side);
  std::size_t expect = 0;
  for (const auto& [id, c] : o.concepts()) {
    if (!c.obsolete) expect += 1 + c.synonyms.size() + c.xref_synonyms.size();
  }
  const auto a = alias_list(o);
  EXPECT_EQ(a.size(), expect);
  EXPECT_GE(a.size(), o.non_obsolete_count());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(o.contains(a[i].concept_id));
    EXPECT_EQ(a[i].text, normalize_alias(a[i].text));
    if (i > 0) {
      EXPECT_LE(std::tie(a[i - 1].concept_id, a[i - 1].kind, a[i - 1].text),
                std::tie(a[i].concept_id, a[i].kind, a[i].text));
    }
  }
}

TEST(OntologyTest, FingerprintTracksContent) {
  const Ontology a = parse("[Term]\nid: X:1\nname: a\n");
  const Ontology b = parse("[Term]\nid: X:1\nname: b\n");
  EXPECT_EQ(ontology_fingerprint(a), ontology_fingerprint(parse("[Term]\nid: X:1\nname: a\n")));
  EXPECT_NE(ontology_fingerprint(a), ontology_fingerprint(b));
}

}  // namespace
}  // namespace conrec
