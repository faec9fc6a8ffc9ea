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
#ifndef CONREC_ONTOLOGY_HPP_
#define CONREC_ONTOLOGY_HPP_

#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace conrec {

struct Synonym {
  std::string text;
  // OBO scope tag (EXACT, BROAD, NARROW, RELATED). Recorded, never used to
  // filter.
  std::string scope;

  bool operator==(const Synonym&) const = default;
};

struct Concept {
  std::string id;
  std::string name;
  std::optional<std::string> definition;
  std::vector<Synonym> synonyms;
  // External-vocabulary synonyms loaded from a sidecar file.
  std::vector<std::string> xref_synonyms;
  // Opaque xref codes as written in the OBO file.
  std::vector<std::string> xrefs;
  std::vector<std::string> parents;
  bool obsolete = false;

  bool operator==(const Concept&) const = default;
};

enum class AliasKind { kName = 0, kSynonym = 1, kXref = 2 };

std::string_view to_string(AliasKind kind);
AliasKind alias_kind_from_string(std::string_view s);

struct Alias {
  std::string text;  // normalized: lowercased, whitespace collapsed
  std::string concept_id;
  AliasKind kind;

  bool operator==(const Alias&) const = default;
};

// Immutable concept store. Concepts are keyed and iterated by ID.
class Ontology {
 public:
  using ConceptMap = std::map<std::string, Concept, std::less<>>;

  Ontology() = default;
  Ontology(ConceptMap concepts, std::optional<std::string> root_id,
           std::string source_label);

  const ConceptMap& concepts() const { return concepts_; }
  std::size_t size() const { return concepts_.size(); }
  const std::optional<std::string>& root_id() const { return root_id_; }
  const std::string& source_label() const { return source_label_; }

  const Concept* find(std::string_view id) const;
  // Throws Error naming the ID when absent.
  const Concept& at(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }

  std::size_t non_obsolete_count() const;

  bool operator==(const Ontology&) const = default;

 private:
  ConceptMap concepts_;
  std::optional<std::string> root_id_;
  std::string source_label_;
};

// Parses OBO 1.2/1.4 text. Only [Term] stanzas are kept. The source label is
// derived from the "ontology:" and "data-version:" header tags.
// Throws ParseError for a stanza without id, a duplicate id, or a live term
// without a name.
Ontology parse_obo(std::istream& in);
Ontology parse_obo_file(const std::string& path);

// Writes the concepts back as OBO [Term] stanzas. xref_synonyms are not part
// of OBO and are written by write_xref_sidecar instead.
void write_obo(const Ontology& ontology, std::ostream& out);

// Sidecar TSV: concept_id<TAB>synonym. Rows naming unknown concepts are
// skipped; the number skipped is returned through skipped when non-null.
Ontology attach_xref_synonyms(const Ontology& ontology, std::istream& sidecar,
                              std::size_t* skipped = nullptr);
void write_xref_sidecar(const Ontology& ontology, std::ostream& out);

// Concepts reachable from root_id through is_a children, obsolete concepts
// excluded, parent lists pruned to the subtree. Throws Error for an unknown
// or obsolete root.
Ontology subtree_filter(const Ontology& ontology, std::string_view root_id);

// One entry per (concept, alias) over name, synonyms and xref synonyms of
// non-obsolete concepts, ordered by concept ID, kind, alias.
std::vector<Alias> alias_list(const Ontology& ontology);

// SHA-256 over the canonical serialization (OBO + sidecar + root + label).
std::string ontology_fingerprint(const Ontology& ontology);

}  // namespace conrec

#endif  // CONREC_ONTOLOGY_HPP_
