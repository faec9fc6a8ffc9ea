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
#ifndef CONREC_RETRIEVAL_HPP_
#define CONREC_RETRIEVAL_HPP_

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "conrec/embedding.hpp"
#include "conrec/extraction.hpp"
#include "conrec/ontology.hpp"

namespace conrec {

struct IndexEntry {
  std::string alias;
  std::string concept_id;
  AliasKind kind = AliasKind::kName;

  bool operator==(const IndexEntry&) const = default;
};

// Dense alias index. Vectors are stored row-major in one contiguous buffer
// so scoring a query is a single pass of dot products. Search is exact; an
// approximate index would replace the scan in top_k_concepts.
class ConceptIndex {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  ConceptIndex() = default;
  // vectors holds entries.size() * dimension values, each row unit-norm.
  ConceptIndex(std::vector<IndexEntry> entries, std::vector<double> vectors,
               std::size_t dimension, std::string ontology_label,
               std::string source_fingerprint);

  const std::vector<IndexEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t dimension() const { return dimension_; }
  const std::string& ontology_label() const { return ontology_label_; }
  // SHA-256 over dimension, entries and vector bytes.
  const std::string& content_hash() const { return content_hash_; }
  // SHA-256 over the alias list and embedder identity that produced the
  // index; lets callers detect a stale index without re-embedding.
  const std::string& source_fingerprint() const { return source_fingerprint_; }

  std::span<const double> vector(std::size_t entry) const {
    return {vectors_.data() + entry * dimension_, dimension_};
  }
  const std::vector<double>& raw_vectors() const { return vectors_; }

  // Distinct concept IDs, sorted; entry_concept(i) indexes into it.
  const std::vector<std::string>& concept_ids() const { return concept_ids_; }
  std::size_t entry_concept(std::size_t entry) const {
    return entry_concept_[entry];
  }

  void save(std::ostream& out) const;
  void save_file(const std::string& path) const;
  // Throws IndexFormatError on bad magic, version, truncation, or hash
  // mismatch.
  static ConceptIndex load(std::istream& in);
  static ConceptIndex load_file(const std::string& path);
  // Reads only the header fields (no vectors, no hash check).
  struct Header {
    std::uint32_t version = 0;
    std::size_t dimension = 0;
    std::size_t entry_count = 0;
    std::string ontology_label;
    std::string content_hash;
    std::string source_fingerprint;
  };
  static Header read_header_file(const std::string& path);

  // Vector-file text format (see FileEmbedder), one line per entry.
  void export_vectors(std::ostream& out) const;

  bool operator==(const ConceptIndex& other) const;

 private:
  void finalize();

  std::vector<IndexEntry> entries_;
  std::vector<double> vectors_;
  std::size_t dimension_ = 0;
  std::string ontology_label_;
  std::string content_hash_;
  std::string source_fingerprint_;
  std::vector<std::string> concept_ids_;
  std::vector<std::size_t> entry_concept_;
};

std::string index_source_fingerprint(const std::vector<Alias>& aliases,
                                     const Embedder& embedder);

// Embeds every alias of the ontology in batches. Backend errors are rethrown
// as BackendError/Error naming the failing batch.
ConceptIndex build_index(const Ontology& ontology, Embedder& embedder,
                         std::size_t batch_size = 256);

struct Candidate {
  std::string concept_id;
  std::string best_alias;
  double score = 0.0;

  bool operator==(const Candidate&) const = default;
};

// Dot product against every entry, per-concept max over aliases, the k best
// concepts by descending score. Equal scores order by concept ID ascending.
std::vector<Candidate> top_k_concepts(const ConceptIndex& index,
                                      std::span<const double> query,
                                      std::size_t k);

struct Thresholds {
  double tau1 = 0.95;  // direct link at or above
  double tau2 = 0.85;  // candidate band is [tau2, tau1)
  std::size_t k = 5;

  // Throws Error unless 0 <= tau2 < tau1 <= 1 and k >= 1.
  void validate() const;
};

enum class DecisionKind { kDirect, kAmbiguous, kNoMatch };

std::string_view to_string(DecisionKind kind);

struct RetrievalDecision {
  DecisionKind kind = DecisionKind::kNoMatch;
  // kDirect: exactly one. kAmbiguous: 1..k in [tau2, tau1), descending.
  // kNoMatch: empty.
  std::vector<Candidate> candidates;
  // Best per-concept score seen, for diagnostics (-inf on an empty index).
  double best_score = 0.0;
};

RetrievalDecision decide(const ConceptIndex& index,
                         std::span<const double> query,
                         const Thresholds& thresholds);

RetrievalDecision query(const ConceptIndex& index, const EntitySpan& entity,
                        Embedder& embedder, const Thresholds& thresholds);

// Embeds all entity texts in one batch, then decides each.
std::vector<RetrievalDecision> query_batch(
    const ConceptIndex& index, const std::vector<EntitySpan>& entities,
    Embedder& embedder, const Thresholds& thresholds);

}  // namespace conrec

#endif  // CONREC_RETRIEVAL_HPP_
