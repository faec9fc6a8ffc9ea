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

// conrec command-line entry point.

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "conrec/config.hpp"
#include "conrec/error.hpp"
#include "conrec/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr int kExitError = 1;
constexpr int kExitConfig = 2;

// Flags that mirror config fields. Path-valued ones are made absolute against
// the working directory, since the config resolves relative paths against its
// own directory.
struct FieldFlag {
  const char* flag;
  const char* key;
  bool is_path;
  const char* help;
};

constexpr FieldFlag kFieldFlags[] = {
    {"--ontology", "ontology.path", true, "OBO file"},
    {"--root-id", "ontology.root_id", false, "restrict to the subtree under this ID"},
    {"--xref-synonyms", "ontology.xref_synonyms", true, "concept_id<TAB>synonym sidecar"},
    {"--strategy", "extraction.strategy", false, "rule_based or segment_based"},
    {"--lexicon", "extraction.lexicon", true, "function-word list"},
    {"--segments", "extraction.segments", true, "segment standoff TSV"},
    {"--embedder", "embedder.kind", false, "http, file or mock"},
    {"--embed-url", "embedder.url", false, "embedding service URL"},
    {"--vectors", "embedder.path", true, "precomputed vector file"},
    {"--tau1", "retrieval.tau1", false, "direct-link threshold"},
    {"--tau2", "retrieval.tau2", false, "candidate threshold"},
    {"--k", "retrieval.k", false, "candidates offered to the model"},
    {"--index", "retrieval.index_path", true, "index file"},
    {"--chat", "chat.kind", false, "openai or scripted"},
    {"--model", "chat.model", false, "chat model name"},
    {"--chat-script", "chat.script", true, "scripted replies (JSON)"},
    {"--corpus", "corpus", true, "directory of .txt files or a JSONL file"},
    {"--gold", "gold", true, "gold standoff TSV"},
    {"--output-dir", "output_dir", true, "where results are written"},
    {"--cache-dir", "cache_dir", true, "index and reply cache"},
    {"--workers", "workers", false, "document worker threads"},
    {"--match-mode", "match_mode", false, "one_to_one or any_overlap"},
};

struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  std::map<std::string, std::string> fields;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-c,--config", opts.config, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", opts.sets, "override any config field: dotted.key=value");
  for (const FieldFlag& f : kFieldFlags) {
    cmd->add_option_function<std::string>(
        f.flag, [&opts, key = f.key](const std::string& v) { opts.fields[key] = v; },
        f.help);
  }
}

std::vector<conrec::ConfigOverride> collect_overrides(const CommonOptions& opts) {
  std::vector<conrec::ConfigOverride> out;
  for (const std::string& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw conrec::ConfigError({"--set expects key=value, got '" + s + "'"});
    }
    out.emplace_back(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const FieldFlag& f : kFieldFlags) {
    const auto it = opts.fields.find(f.key);
    if (it == opts.fields.end()) continue;
    std::string value = it->second;
    if (f.is_path) value = json(fs::absolute(value).lexically_normal().string()).dump();
    out.emplace_back(f.key, value);
  }
  return out;
}

conrec::RunConfig load(const CommonOptions& opts, bool check_paths = true) {
  return conrec::load_config(opts.config, collect_overrides(opts), check_paths);
}

int cmd_validate(const CommonOptions& opts) {
  const auto cfg = load(opts);
  std::cout << "config ok (" << conrec::config_hash(cfg).substr(0, 16) << ")\n";
  return 0;
}

int cmd_annotate(const CommonOptions& opts) {
  const auto cfg = load(opts);
  auto backends = conrec::make_backends(cfg);
  const auto result = conrec::run(cfg, backends);
  std::cout << result.mentions.size() << " mentions written to "
            << (cfg.output_dir / "annotations.tsv").string() << "\n";
  if (result.mention_report) {
    std::cout << conrec::reports_to_text(*result.mention_report,
                                         *result.document_report, nullptr, false);
  }
  if (result.entity_errors > 0) {
    std::cerr << "warning: " << result.entity_errors
              << " entities skipped after backend errors\n";
  }
  return 0;
}

int cmd_evaluate(const CommonOptions& opts, const std::string& annotations,
                 std::string gold, bool per_document, bool as_json) {
  const auto cfg = load(opts, false);
  if (gold.empty()) {
    if (!cfg.gold_path) throw conrec::ConfigError({"gold: no gold file given"});
    gold = cfg.gold_path->string();
  }
  const auto r = conrec::evaluate_annotations(cfg, annotations, gold);
  if (as_json) {
    std::cout << conrec::reports_to_json(r.mention, r.document, &r.validation,
                                         per_document, cfg.match_mode);
  } else {
    std::cout << conrec::reports_to_text(r.mention, r.document, &r.validation,
                                         per_document);
  }
  return 0;
}

int cmd_build_index(const CommonOptions& opts) {
  const auto cfg = load(opts, false);
  const auto loaded = conrec::load_ontology(cfg);
  auto embedder = conrec::make_embedder(cfg.embedder);
  const fs::path path = cfg.resolved_index_path();
  const auto t0 = std::chrono::steady_clock::now();
  const auto built =
      conrec::build_index_file(loaded.ontology, *embedder, path, cfg.embedder.batch_size);
  const double total =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const json manifest = {
      {"index_path", path.string()},
      {"content_hash", built.index.content_hash()},
      {"source_fingerprint", built.index.source_fingerprint()},
      {"ontology_hash", loaded.fingerprint},
      {"entries", built.index.size()},
      {"concepts", built.index.concept_ids().size()},
      {"dimension", built.index.dimension()},
      {"embedder", embedder->identity()},
      {"unchanged", built.unchanged},
      {"embed_seconds", built.seconds},
      {"duration_seconds", total}};
  fs::create_directories(cfg.output_dir);
  const fs::path manifest_path = cfg.output_dir / "build_index_manifest.json";
  std::ofstream(manifest_path) << manifest.dump(2) << "\n";
  std::cout << manifest.dump(2) << "\n";
  return 0;
}

void report_error(const std::exception& e, bool as_json) {
  const auto* cfg_err = dynamic_cast<const conrec::ConfigError*>(&e);
  std::string kind = "error";
  if (cfg_err != nullptr) {
    kind = "config";
  } else if (dynamic_cast<const conrec::ParseError*>(&e) != nullptr) {
    kind = "parse";
  } else if (dynamic_cast<const conrec::BackendError*>(&e) != nullptr) {
    kind = "backend";
  } else if (dynamic_cast<const conrec::IndexFormatError*>(&e) != nullptr) {
    kind = "index_format";
  }
  if (as_json) {
    json j = {{"error", {{"kind", kind}, {"message", e.what()}}}};
    if (cfg_err != nullptr) j["error"]["problems"] = cfg_err->problems();
    std::cout << j.dump() << "\n";
  } else {
    std::cerr << "conrec: " << e.what() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Ontology concept recognition over text corpora"};
  app.require_subcommand(1);
  bool error_json = false;
  std::string log_level = "warn";
  app.add_flag("--error-json", error_json, "print failures as a JSON object on stdout");
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  CommonOptions annotate_opts, evaluate_opts, build_opts, validate_opts;
  auto* annotate = app.add_subcommand("annotate", "run the full pipeline over a corpus");
  add_common(annotate, annotate_opts);

  auto* evaluate = app.add_subcommand("evaluate", "rescore an annotations file against gold");
  add_common(evaluate, evaluate_opts);
  std::string annotations;
  std::string eval_gold;
  bool per_document = false;
  bool as_json = false;
  evaluate->add_option("-a,--annotations", annotations, "annotations TSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate->add_option("--gold-file", eval_gold, "gold TSV (defaults to the config's)");
  evaluate->add_flag("--per-document", per_document, "include per-document counts");
  evaluate->add_flag("--json", as_json, "emit JSON instead of a table");

  auto* build = app.add_subcommand("build-index", "embed all aliases and write the index");
  add_common(build, build_opts);

  auto* validate = app.add_subcommand("validate-config", "check a configuration");
  add_common(validate, validate_opts);

  CLI11_PARSE(app, argc, argv);

  auto logger = spdlog::stderr_color_mt("conrec");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*annotate) return cmd_annotate(annotate_opts);
    if (*evaluate) {
      return cmd_evaluate(evaluate_opts, annotations, eval_gold, per_document, as_json);
    }
    if (*build) return cmd_build_index(build_opts);
    return cmd_validate(validate_opts);
  } catch (const conrec::ConfigError& e) {
    report_error(e, error_json);
    return kExitConfig;
  } catch (const std::exception& e) {
    report_error(e, error_json);
    return kExitError;
  }
}
