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

#include "conrec/pipeline.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "conrec/chat_client.hpp"
#include "conrec/error.hpp"
#include "conrec/hashing.hpp"
#include "conrec/postprocess.hpp"
#include "conrec/text.hpp"

namespace conrec {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string format_score(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", s);
  return buf;
}

std::size_t parse_offset(std::string_view field, std::size_t line) {
  std::size_t v = 0;
  const auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || p != field.data() + field.size()) {
    throw ParseError("bad offset '" + std::string(field) + "'", line);
  }
  return v;
}

// Runs fn(i) for i in [0, n) on up to `threads` threads. The first exception
// stops the remaining work and is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        while (!failed.load()) {
          const std::size_t i = next.fetch_add(1);
          if (i >= n) return;
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mu);
            if (!error) error = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

void write_text_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

json counts_json(const EvalReport& r) {
  return {{"tp", r.counts.tp}, {"fp", r.counts.fp}, {"fn", r.counts.fn},
          {"precision", r.precision}, {"recall", r.recall}, {"f1", r.f1}};
}

}  // namespace

Backends make_backends(const RunConfig& config) {
  Backends b;
  b.embedder = std::make_shared<CachingEmbedder>(make_embedder(config.embedder));
  switch (config.chat.kind) {
    case ChatKind::kScripted:
      b.chat = ScriptedChatClient::load_file(config.chat.script.string());
      break;
    case ChatKind::kOpenAi: {
      const char* key = std::getenv(config.chat.auth_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw ConfigError({"chat.auth_env: environment variable " +
                           config.chat.auth_env + " is not set"});
      }
      OpenAiChatOptions opts;
      opts.endpoint = config.chat.endpoint;
      opts.model = config.chat.model;
      opts.api_key = key;
      opts.max_in_flight = config.chat.max_in_flight;
      opts.requests_per_second = config.chat.requests_per_second;
      b.chat = std::make_shared<OpenAiChatClient>(std::move(opts));
      break;
    }
  }
  return b;
}

LoadedOntology load_ontology(const RunConfig& config) {
  LoadedOntology out;
  Ontology onto = parse_obo_file(config.ontology_path.string());
  if (config.xref_synonyms_path) {
    std::ifstream in(*config.xref_synonyms_path);
    if (!in) throw Error("cannot open " + config.xref_synonyms_path->string());
    onto = attach_xref_synonyms(onto, in, &out.xref_rows_skipped);
    if (out.xref_rows_skipped > 0) {
      spdlog::warn("{} xref synonym rows name unknown concepts and were skipped",
                   out.xref_rows_skipped);
    }
  }
  if (config.root_id) onto = subtree_filter(onto, *config.root_id);
  if (config.ontology_label) {
    onto = Ontology(onto.concepts(), onto.root_id(), *config.ontology_label);
  }
  out.fingerprint = ontology_fingerprint(onto);
  out.ontology = std::move(onto);
  return out;
}

IndexBuild build_index_file(const Ontology& ontology, Embedder& embedder,
                            const fs::path& path, std::size_t batch_size) {
  IndexBuild out;
  const auto t0 = Clock::now();
  out.index = build_index(ontology, embedder, batch_size);
  out.seconds = seconds_since(t0);
  if (fs::exists(path)) {
    try {
      out.unchanged =
          ConceptIndex::read_header_file(path.string()).content_hash ==
          out.index.content_hash();
    } catch (const Error& e) {
      spdlog::warn("replacing unreadable index {}: {}", path.string(), e.what());
    }
  }
  if (!out.unchanged) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    out.index.save_file(path.string());
  }
  return out;
}

IndexBuild load_or_build_index(const Ontology& ontology, Embedder& embedder,
                               const fs::path& path, std::size_t batch_size) {
  if (fs::exists(path)) {
    try {
      const auto header = ConceptIndex::read_header_file(path.string());
      const std::string want = index_source_fingerprint(alias_list(ontology), embedder);
      if (header.source_fingerprint == want &&
          header.dimension == embedder.dimension()) {
        IndexBuild out;
        const auto t0 = Clock::now();
        out.index = ConceptIndex::load_file(path.string());
        out.seconds = seconds_since(t0);
        out.reused = true;
        out.unchanged = true;
        return out;
      }
      spdlog::info("index {} is stale; rebuilding", path.string());
    } catch (const IndexFormatError& e) {
      spdlog::warn("index {} unusable ({}); rebuilding", path.string(), e.what());
    }
  }
  return build_index_file(ontology, embedder, path, batch_size);
}

DocumentResult annotate_document(const Document& doc, Strategy strategy,
                                 const std::vector<Segment>& external_segments,
                                 const FunctionWordLexicon& lexicon,
                                 const ConceptIndex& index, Embedder& embedder,
                                 const Thresholds& thresholds, Linker& linker,
                                 std::size_t link_concurrency) {
  DocumentResult out;
  const std::vector<EntitySpan> spans =
      strategy == Strategy::kRuleBased
          ? extract_rule_based(doc, lexicon)
          : extract_segment_based(doc, external_segments, lexicon);
  out.spans = spans.size();
  if (spans.empty()) return out;

  // One batch per document; on failure fall back to per-entity queries so a
  // single bad entity only loses itself.
  std::vector<std::optional<RetrievalDecision>> decisions(spans.size());
  try {
    auto batch = query_batch(index, spans, embedder, thresholds);
    for (std::size_t i = 0; i < spans.size(); ++i) decisions[i] = std::move(batch[i]);
  } catch (const Error& batch_error) {
    spdlog::debug("batch query failed for {}: {}", doc.doc_id, batch_error.what());
    for (std::size_t i = 0; i < spans.size(); ++i) {
      try {
        decisions[i] = query(index, spans[i], embedder, thresholds);
      } catch (const Error& e) {
        ++out.entity_errors;
        spdlog::warn("skipping \"{}\" in {}: {}", spans[i].text, doc.doc_id, e.what());
      }
    }
  }

  std::vector<std::size_t> ambiguous;
  std::vector<std::optional<LinkedMention>> linked(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (!decisions[i]) continue;
    spdlog::debug("{} [{},{}) \"{}\" {} {:.6f}", doc.doc_id, spans[i].start, spans[i].end,
                  spans[i].text, to_string(decisions[i]->kind), decisions[i]->best_score);
    switch (decisions[i]->kind) {
      case DecisionKind::kDirect:
        ++out.direct;
        linked[i] = linker.link(spans[i], *decisions[i]);
        break;
      case DecisionKind::kAmbiguous:
        ++out.ambiguous;
        ambiguous.push_back(i);
        break;
      case DecisionKind::kNoMatch:
        ++out.no_match;
        break;
    }
  }

  std::atomic<std::size_t> link_errors{0};
  parallel_for(ambiguous.size(), link_concurrency, [&](std::size_t j) {
    const std::size_t i = ambiguous[j];
    try {
      linked[i] = linker.link(spans[i], *decisions[i]);
    } catch (const Error& e) {
      ++link_errors;
      spdlog::warn("skipping \"{}\" in {}: {}", spans[i].text, doc.doc_id, e.what());
    }
  });
  out.entity_errors += link_errors.load();

  std::vector<LinkedMention> raw;
  for (auto& m : linked) {
    if (m) raw.push_back(std::move(*m));
  }
  out.mentions = resolve_overlaps(raw, policy_for(strategy));
  return out;
}

RunResult run(const RunConfig& config, Backends& backends) {
  const auto run_start = Clock::now();
  config.thresholds.validate();
  RunResult result;
  json timings = json::object();
  json warnings = json::array();

  auto t0 = Clock::now();
  const LoadedOntology loaded = load_ontology(config);
  timings["ontology"] = seconds_since(t0);
  if (loaded.xref_rows_skipped > 0) {
    warnings.push_back(std::to_string(loaded.xref_rows_skipped) +
                       " xref synonym rows skipped (unknown concept)");
  }

  t0 = Clock::now();
  const Corpus corpus = ingest_corpus(config.corpus_path);
  SegmentTable segments;
  if (config.segments_path) segments = load_segments_file(config.segments_path->string());
  const FunctionWordLexicon lexicon =
      config.lexicon_path ? FunctionWordLexicon::load_file(config.lexicon_path->string())
                          : FunctionWordLexicon::builtin();
  timings["ingest"] = seconds_since(t0);
  for (const auto& [doc_id, segs] : segments) {
    if (corpus.find(doc_id) == nullptr) {
      warnings.push_back("segments name unknown document " + doc_id);
    }
  }

  // An empty corpus needs no index, so no backend is touched.
  std::optional<IndexBuild> index;
  t0 = Clock::now();
  if (!corpus.empty()) {
    index = load_or_build_index(loaded.ontology, *backends.embedder,
                                config.resolved_index_path(), config.embedder.batch_size);
  }
  timings["index"] = seconds_since(t0);

  fs::create_directories(config.cache_dir);
  ReplyCache reply_cache(config.cache_dir / "chat_replies.jsonl");
  Linker linker(loaded.ontology, *backends.chat, &reply_cache);

  t0 = Clock::now();
  std::vector<DocumentResult> per_doc(corpus.size());
  static const std::vector<Segment> kNoSegments;
  parallel_for(corpus.size(), config.workers, [&](std::size_t i) {
    const Document& doc = corpus.documents[i];
    const auto it = segments.find(doc.doc_id);
    per_doc[i] = annotate_document(doc, config.strategy,
                                   it == segments.end() ? kNoSegments : it->second,
                                   lexicon, index->index, *backends.embedder,
                                   config.thresholds, linker, config.chat.max_in_flight);
  });
  timings["annotate"] = seconds_since(t0);

  std::size_t spans = 0, direct = 0, ambiguous = 0, no_match = 0;
  for (auto& d : per_doc) {
    spans += d.spans;
    direct += d.direct;
    ambiguous += d.ambiguous;
    no_match += d.no_match;
    result.entity_errors += d.entity_errors;
    std::move(d.mentions.begin(), d.mentions.end(), std::back_inserter(result.mentions));
  }
  result.link_stats = linker.stats();
  if (result.entity_errors > 0) {
    warnings.push_back(std::to_string(result.entity_errors) +
                       " entities skipped after backend errors");
  }

  t0 = Clock::now();
  fs::create_directories(config.output_dir);
  {
    std::ostringstream tsv, js;
    write_annotations_tsv(tsv, result.mentions);
    write_annotations_json(js, result.mentions);
    write_text_file(config.output_dir / "annotations.tsv", tsv.str());
    write_text_file(config.output_dir / "annotations.json", js.str());
  }
  timings["write"] = seconds_since(t0);

  std::optional<GoldValidation> validation;
  if (config.gold_path) {
    t0 = Clock::now();
    const auto gold = load_gold_file(config.gold_path->string());
    validation = validate_gold(gold, &corpus, &loaded.ontology);
    DocIdSet ids;
    for (const auto& d : corpus.documents) ids.insert(d.doc_id);
    result.mention_report = mention_metrics(result.mentions, gold, &ids, config.match_mode);
    result.document_report = document_metrics(result.mentions, gold, &ids);
    write_text_file(config.output_dir / "evaluation.json",
                    reports_to_json(*result.mention_report, *result.document_report,
                                    &*validation, true, config.match_mode));
    write_text_file(config.output_dir / "evaluation.txt",
                    reports_to_text(*result.mention_report, *result.document_report,
                                    &*validation, true));
    timings["evaluate"] = seconds_since(t0);
    if (!validation->ok()) warnings.push_back("gold validation reported problems");
  }
  timings["total"] = seconds_since(run_start);

  const LinkStats& ls = result.link_stats;
  json manifest = {
      {"config_hash", config_hash(config)},
      {"ontology",
       {{"label", loaded.ontology.source_label()},
        {"content_hash", loaded.fingerprint},
        {"concepts", loaded.ontology.non_obsolete_count()},
        {"root_id", config.root_id ? json(*config.root_id) : json(nullptr)}}},
      {"index",
       index ? json{{"path", config.resolved_index_path().string()},
                    {"content_hash", index->index.content_hash()},
                    {"source_fingerprint", index->index.source_fingerprint()},
                    {"entries", index->index.size()},
                    {"dimension", index->index.dimension()},
                    {"reused", index->reused},
                    {"seconds", index->seconds}}
             : json{{"path", config.resolved_index_path().string()},
                    {"content_hash", nullptr},
                    {"skipped", "empty corpus"}}},
      {"backends",
       {{"embedder", backends.embedder->identity()},
        {"chat", backends.chat->model_id()}}},
      {"strategy", to_string(config.strategy)},
      {"thresholds",
       {{"tau1", config.thresholds.tau1},
        {"tau2", config.thresholds.tau2},
        {"k", config.thresholds.k}}},
      {"counts",
       {{"documents", corpus.size()},
        {"spans", spans},
        {"direct", direct},
        {"ambiguous", ambiguous},
        {"no_match", no_match},
        {"mentions", result.mentions.size()},
        {"entity_errors", result.entity_errors}}},
      {"linking",
       {{"model_calls", ls.model_calls},
        {"accepted", ls.accepted},
        {"rejected_confidence", ls.rejected_confidence},
        {"rejected_none", ls.rejected_none},
        {"rejected_out_of_candidates", ls.rejected_out_of_candidates},
        {"malformed", ls.malformed},
        {"cached_replies", reply_cache.size()}}},
      {"document_unit", "one corpus file or JSONL row is one document"},
      {"warnings", warnings},
      {"timings_seconds", timings}};
  if (result.mention_report) {
    manifest["evaluation"] = {{"mention", counts_json(*result.mention_report)},
                              {"document", counts_json(*result.document_report)}};
  }
  result.manifest_json = manifest.dump(2) + "\n";
  write_text_file(config.output_dir / "manifest.json", result.manifest_json);
  return result;
}

EvaluationResult evaluate_annotations(const RunConfig& config,
                                      const fs::path& annotations,
                                      const fs::path& gold_path) {
  std::ifstream in(annotations);
  if (!in) throw Error("cannot open annotations " + annotations.string());
  const auto pred = read_annotations_tsv(in);
  const auto gold = load_gold_file(gold_path.string());
  const Corpus corpus = ingest_corpus(config.corpus_path);
  const LoadedOntology loaded = load_ontology(config);
  DocIdSet ids;
  for (const auto& d : corpus.documents) ids.insert(d.doc_id);
  EvaluationResult out;
  out.validation = validate_gold(gold, &corpus, &loaded.ontology);
  out.mention = mention_metrics(pred, gold, &ids, config.match_mode);
  out.document = document_metrics(pred, gold, &ids);
  return out;
}

void write_annotations_tsv(std::ostream& out,
                           const std::vector<LinkedMention>& mentions) {
  out << "# doc_id\tstart\tend\tconcept_id\tprovenance\tscore\n";
  for (const auto& m : mentions) {
    out << m.span.doc_id << '\t' << m.span.start << '\t' << m.span.end << '\t'
        << m.concept_id << '\t' << to_string(m.provenance) << '\t';
    // Model links carry the confidence tier; the cosine is in the JSON.
    if (m.provenance == Provenance::kLlmLinked && m.confidence) {
      out << to_string(*m.confidence);
    } else {
      out << format_score(m.score);
    }
    out << '\n';
  }
}

std::vector<LinkedMention> read_annotations_tsv(std::istream& in) {
  std::vector<LinkedMention> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const auto f = split(line, '\t');
    if (f.size() != 6) throw ParseError("expected 6 tab-separated fields", lineno);
    LinkedMention m;
    m.span.doc_id = f[0];
    m.span.start = parse_offset(f[1], lineno);
    m.span.end = parse_offset(f[2], lineno);
    if (m.span.end <= m.span.start) throw ParseError("end must exceed start", lineno);
    m.concept_id = f[3];
    try {
      m.provenance = provenance_from_string(f[4]);
    } catch (const Error& e) {
      throw ParseError(e.what(), lineno);
    }
    const std::string score(f[5]);
    if (score == "HIGH") {
      m.confidence = Confidence::kHigh;
    } else {
      char* end = nullptr;
      m.score = std::strtod(score.c_str(), &end);
      if (score.empty() || end != score.c_str() + score.size()) {
        throw ParseError("bad score '" + score + "'", lineno);
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

void write_annotations_json(std::ostream& out,
                            const std::vector<LinkedMention>& mentions) {
  json arr = json::array();
  for (const auto& m : mentions) {
    arr.push_back({{"doc_id", m.span.doc_id},
                   {"start", m.span.start},
                   {"end", m.span.end},
                   {"text", m.span.text},
                   {"strategy", to_string(m.span.strategy)},
                   {"concept_id", m.concept_id},
                   {"provenance", to_string(m.provenance)},
                   {"score", m.score},
                   {"confidence", m.confidence ? json(to_string(*m.confidence))
                                               : json(nullptr)}});
  }
  out << arr.dump(2) << '\n';
}

}  // namespace conrec
