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
#ifndef CONREC_PIPELINE_HPP_
#define CONREC_PIPELINE_HPP_

#include <filesystem>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "conrec/config.hpp"
#include "conrec/corpus.hpp"
#include "conrec/embedding.hpp"
#include "conrec/evaluation.hpp"
#include "conrec/linking.hpp"
#include "conrec/ontology.hpp"
#include "conrec/retrieval.hpp"

namespace conrec {

struct Backends {
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<ChatClient> chat;
};

// Builds the configured backends. The chat token is read from the
// environment variable named by config.chat.auth_env.
Backends make_backends(const RunConfig& config);

struct LoadedOntology {
  Ontology ontology;
  std::string fingerprint;
  std::size_t xref_rows_skipped = 0;
};

// Parse, attach sidecar synonyms, filter to the root, apply label override.
LoadedOntology load_ontology(const RunConfig& config);

struct IndexBuild {
  ConceptIndex index;
  double seconds = 0.0;
  // true when an existing file with the same content hash was found.
  bool unchanged = false;
  bool reused = false;  // loaded instead of built
};

// Always embeds; writes the file unless its content hash already matches.
IndexBuild build_index_file(const Ontology& ontology, Embedder& embedder,
                            const std::filesystem::path& path,
                            std::size_t batch_size);

// Loads the index at path when its source fingerprint matches the ontology
// and embedder, otherwise rebuilds and persists it.
IndexBuild load_or_build_index(const Ontology& ontology, Embedder& embedder,
                               const std::filesystem::path& path,
                               std::size_t batch_size);

struct DocumentResult {
  std::vector<LinkedMention> mentions;
  std::size_t spans = 0;
  std::size_t direct = 0;
  std::size_t ambiguous = 0;
  std::size_t no_match = 0;
  std::size_t entity_errors = 0;
};

// Extract, retrieve, link and resolve one document. Ambiguous entities are
// linked by up to link_concurrency threads; output order does not depend on it.
DocumentResult annotate_document(const Document& doc, Strategy strategy,
                                 const std::vector<Segment>& external_segments,
                                 const FunctionWordLexicon& lexicon,
                                 const ConceptIndex& index,
                                 Embedder& embedder,
                                 const Thresholds& thresholds, Linker& linker,
                                 std::size_t link_concurrency = 1);

struct RunResult {
  std::vector<LinkedMention> mentions;  // corpus order, then (start, end)
  std::optional<EvalReport> mention_report;
  std::optional<EvalReport> document_report;
  std::string manifest_json;
  LinkStats link_stats;
  std::size_t entity_errors = 0;
};

// Full batch job. Writes annotations.tsv, annotations.json, manifest.json
// and, with gold, evaluation.json and evaluation.txt to config.output_dir.
RunResult run(const RunConfig& config, Backends& backends);

struct EvaluationResult {
  EvalReport mention;
  EvalReport document;
  GoldValidation validation;
};

// Rescores an annotations TSV against the configured gold file. Touches no
// backend.
EvaluationResult evaluate_annotations(const RunConfig& config,
                                      const std::filesystem::path& annotations,
                                      const std::filesystem::path& gold);

// TSV: doc_id, start, end, concept_id, provenance, score. The score column
// is the cosine with six decimals for direct links and the confidence tier
// for model links.
void write_annotations_tsv(std::ostream& out,
                           const std::vector<LinkedMention>& mentions);
std::vector<LinkedMention> read_annotations_tsv(std::istream& in);
void write_annotations_json(std::ostream& out,
                            const std::vector<LinkedMention>& mentions);

}  // namespace conrec

#endif  // CONREC_PIPELINE_HPP_
