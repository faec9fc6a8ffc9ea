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

#include "conrec/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

#include "conrec/error.hpp"
#include "conrec/hashing.hpp"

namespace conrec {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string join_lines(const std::vector<std::string>& problems) {
  std::string out = "invalid configuration:";
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

// Walks one JSON object, recording every problem instead of stopping at the
// first. Each accessor marks its key as known; leftover keys are reported
// as unknown.
class Section {
 public:
  Section(const json* node, std::string prefix, std::vector<std::string>& problems)
      : node_(node), prefix_(std::move(prefix)), problems_(problems) {
    if (node_ != nullptr && !node_->is_object()) {
      problems_.push_back(name("") + ": expected an object");
      node_ = nullptr;
    }
  }

  ~Section() {
    if (node_ == nullptr) return;
    for (const auto& [k, v] : node_->items()) {
      if (!known_.contains(k)) problems_.push_back(name(k) + ": unknown field");
    }
  }

  const json* child(const std::string& key) {
    known_.insert(key);
    if (node_ == nullptr || !node_->contains(key)) return nullptr;
    return &(*node_)[key];
  }

  std::optional<std::string> str(const std::string& key, bool required = false) {
    const json* v = child(key);
    if (v == nullptr || v->is_null()) {
      if (required) problems_.push_back(name(key) + ": required");
      return std::nullopt;
    }
    if (!v->is_string() || v->get<std::string>().empty()) {
      problems_.push_back(name(key) + ": expected a non-empty string");
      return std::nullopt;
    }
    return v->get<std::string>();
  }

  std::optional<double> number(const std::string& key) {
    const json* v = child(key);
    if (v == nullptr || v->is_null()) return std::nullopt;
    if (!v->is_number()) {
      problems_.push_back(name(key) + ": expected a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<std::uint64_t> integer(const std::string& key, std::uint64_t min) {
    const json* v = child(key);
    if (v == nullptr || v->is_null()) return std::nullopt;
    if (!v->is_number_integer() || (v->is_number_integer() && v->get<std::int64_t>() < 0 &&
                                    !v->is_number_unsigned())) {
      problems_.push_back(name(key) + ": expected a non-negative integer");
      return std::nullopt;
    }
    const auto x = v->get<std::uint64_t>();
    if (x < min) {
      problems_.push_back(name(key) + ": must be at least " + std::to_string(min));
      return std::nullopt;
    }
    return x;
  }

  std::string name(const std::string& key) const {
    if (prefix_.empty()) return key;
    return key.empty() ? prefix_ : prefix_ + "." + key;
  }

 private:
  const json* node_;
  std::string prefix_;
  std::vector<std::string>& problems_;
  std::set<std::string> known_;
};

void apply_override(json& doc, const ConfigOverride& o,
                    std::vector<std::string>& problems) {
  json value;
  try {
    value = json::parse(o.second);
  } catch (const json::exception&) {
    value = o.second;
  }
  json* node = &doc;
  std::string_view key = o.first;
  while (true) {
    const std::size_t dot = key.find('.');
    const std::string part(key.substr(0, dot));
    if (part.empty()) {
      problems.push_back("override '" + o.first + "': empty key segment");
      return;
    }
    if (!node->is_object()) {
      problems.push_back("override '" + o.first + "': parent is not an object");
      return;
    }
    if (dot == std::string_view::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    key = key.substr(dot + 1);
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return (path.is_absolute() ? path : base / path).lexically_normal();
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : Error(join_lines(problems)), problems_(std::move(problems)) {}

fs::path RunConfig::resolved_index_path() const {
  return index_path ? *index_path : cache_dir / "concept_index.bin";
}

RunConfig parse_config(std::string_view json_text, const fs::path& base_dir,
                       const std::vector<ConfigOverride>& overrides,
                       bool check_paths) {
  std::vector<std::string> problems;
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError({std::string("config is not valid JSON: ") + e.what()});
  }
  if (!doc.is_object()) throw ConfigError({"config must be a JSON object"});
  for (const auto& o : overrides) apply_override(doc, o, problems);

  const fs::path base = fs::absolute(base_dir);
  RunConfig cfg;
  std::vector<std::pair<std::string, fs::path>> inputs;  // must exist
  const auto path_of = [&](const std::string& field, const std::string& value) {
    fs::path p = resolve(base, value);
    inputs.emplace_back(field, p);
    return p;
  };

  {
    Section top(&doc, "", problems);
    {
      Section s(top.child("ontology"), "ontology", problems);
      if (auto p = s.str("path", true)) cfg.ontology_path = path_of("ontology.path", *p);
      cfg.root_id = s.str("root_id");
      if (auto p = s.str("xref_synonyms")) {
        cfg.xref_synonyms_path = path_of("ontology.xref_synonyms", *p);
      }
      cfg.ontology_label = s.str("label");
    }
    {
      Section s(top.child("extraction"), "extraction", problems);
      if (auto v = s.str("strategy")) {
        if (*v == "rule_based" || *v == "segment_based") {
          cfg.strategy = strategy_from_string(*v);
        } else {
          problems.push_back("extraction.strategy: expected rule_based or segment_based");
        }
      }
      if (auto p = s.str("lexicon")) cfg.lexicon_path = path_of("extraction.lexicon", *p);
      if (auto p = s.str("segments")) {
        cfg.segments_path = path_of("extraction.segments", *p);
        if (cfg.strategy != Strategy::kSegmentBased) {
          problems.push_back(
              "extraction.segments: only allowed with strategy segment_based");
        }
      }
    }
    {
      Section s(top.child("embedder"), "embedder", problems);
      if (auto v = s.str("kind")) {
        if (*v == "http") {
          cfg.embedder.kind = EmbedderKind::kHttp;
        } else if (*v == "file") {
          cfg.embedder.kind = EmbedderKind::kFile;
        } else if (*v == "mock") {
          cfg.embedder.kind = EmbedderKind::kMock;
        } else {
          problems.push_back("embedder.kind: expected http, file or mock");
        }
      }
      if (auto v = s.integer("dimension", 1)) cfg.embedder.dimension = *v;
      if (auto v = s.integer("batch_size", 1)) cfg.embedder.batch_size = *v;
      if (auto v = s.integer("max_in_flight", 1)) cfg.embedder.max_in_flight = *v;
      if (auto v = s.integer("seed", 0)) cfg.embedder.seed = *v;
      cfg.embedder.url = s.str("url").value_or("http://127.0.0.1:8000/embed");
      if (auto p = s.str("path")) {
        cfg.embedder.path = cfg.embedder.kind == EmbedderKind::kFile
                                ? path_of("embedder.path", *p).string()
                                : resolve(base, *p).string();
      } else if (cfg.embedder.kind == EmbedderKind::kFile) {
        problems.push_back("embedder.path: required for kind file");
      }
      if (cfg.embedder.kind == EmbedderKind::kHttp &&
          cfg.embedder.url.rfind("http://", 0) != 0 &&
          cfg.embedder.url.rfind("https://", 0) != 0) {
        problems.push_back("embedder.url: expected an http(s) URL");
      }
    }
    {
      Section s(top.child("retrieval"), "retrieval", problems);
      if (auto v = s.number("tau1")) cfg.thresholds.tau1 = *v;
      if (auto v = s.number("tau2")) cfg.thresholds.tau2 = *v;
      if (auto v = s.integer("k", 1)) cfg.thresholds.k = *v;
      if (!(cfg.thresholds.tau2 >= 0.0 && cfg.thresholds.tau2 < cfg.thresholds.tau1 &&
            cfg.thresholds.tau1 <= 1.0)) {
        problems.push_back("retrieval: thresholds must satisfy 0 <= tau2 < tau1 <= 1");
      }
      if (auto p = s.str("index_path")) cfg.index_path = resolve(base, *p);
    }
    {
      Section s(top.child("chat"), "chat", problems);
      if (auto v = s.str("kind")) {
        if (*v == "openai") {
          cfg.chat.kind = ChatKind::kOpenAi;
        } else if (*v == "scripted") {
          cfg.chat.kind = ChatKind::kScripted;
        } else {
          problems.push_back("chat.kind: expected openai or scripted");
        }
      }
      if (auto v = s.str("endpoint")) cfg.chat.endpoint = *v;
      if (auto v = s.str("model")) cfg.chat.model = *v;
      if (auto v = s.str("auth_env")) cfg.chat.auth_env = *v;
      if (auto v = s.integer("max_in_flight", 1)) cfg.chat.max_in_flight = *v;
      if (auto v = s.number("requests_per_second")) {
        if (*v < 0.0) {
          problems.push_back("chat.requests_per_second: must be >= 0");
        } else {
          cfg.chat.requests_per_second = *v;
        }
      }
      if (auto p = s.str("script")) {
        cfg.chat.script = cfg.chat.kind == ChatKind::kScripted
                              ? path_of("chat.script", *p)
                              : resolve(base, *p);
      } else if (cfg.chat.kind == ChatKind::kScripted) {
        problems.push_back("chat.script: required for kind scripted");
      }
      if (s.child("api_key") != nullptr) {
        problems.push_back("chat.api_key: tokens are read from the variable named by chat.auth_env");
      }
      if (cfg.chat.kind == ChatKind::kOpenAi &&
          cfg.chat.endpoint.rfind("http://", 0) != 0 &&
          cfg.chat.endpoint.rfind("https://", 0) != 0) {
        problems.push_back("chat.endpoint: expected an http(s) URL");
      }
    }
    if (auto p = top.str("corpus", true)) cfg.corpus_path = path_of("corpus", *p);
    if (auto p = top.str("gold")) cfg.gold_path = path_of("gold", *p);
    if (auto p = top.str("output_dir", true)) cfg.output_dir = resolve(base, *p);
    if (auto p = top.str("cache_dir")) {
      cfg.cache_dir = resolve(base, *p);
    } else if (!cfg.output_dir.empty()) {
      cfg.cache_dir = cfg.output_dir / "cache";
    }
    if (auto v = top.integer("workers", 1)) cfg.workers = *v;
    if (auto v = top.str("match_mode")) {
      if (*v == "one_to_one" || *v == "any_overlap") {
        cfg.match_mode = match_mode_from_string(*v);
      } else {
        problems.push_back("match_mode: expected one_to_one or any_overlap");
      }
    }
  }

  if (check_paths) {
    for (const auto& [field, p] : inputs) {
      if (!fs::exists(p)) problems.push_back(field + ": path does not exist: " + p.string());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));

  const auto opt_path = [](const std::optional<fs::path>& p) -> json {
    return p ? json(p->string()) : json(nullptr);
  };
  const auto opt_str = [](const std::optional<std::string>& s) -> json {
    return s ? json(*s) : json(nullptr);
  };
  const json canonical = {
      {"ontology",
       {{"path", cfg.ontology_path.string()},
        {"root_id", opt_str(cfg.root_id)},
        {"xref_synonyms", opt_path(cfg.xref_synonyms_path)},
        {"label", opt_str(cfg.ontology_label)}}},
      {"extraction",
       {{"strategy", to_string(cfg.strategy)},
        {"lexicon", opt_path(cfg.lexicon_path)},
        {"segments", opt_path(cfg.segments_path)}}},
      {"embedder",
       {{"kind", cfg.embedder.kind == EmbedderKind::kHttp   ? "http"
                 : cfg.embedder.kind == EmbedderKind::kFile ? "file"
                                                            : "mock"},
        {"dimension", cfg.embedder.dimension},
        {"url", cfg.embedder.url},
        {"path", cfg.embedder.path},
        {"batch_size", cfg.embedder.batch_size},
        {"max_in_flight", cfg.embedder.max_in_flight},
        {"seed", cfg.embedder.seed}}},
      {"retrieval",
       {{"tau1", cfg.thresholds.tau1},
        {"tau2", cfg.thresholds.tau2},
        {"k", cfg.thresholds.k},
        {"index_path", cfg.resolved_index_path().string()}}},
      {"chat",
       {{"kind", cfg.chat.kind == ChatKind::kOpenAi ? "openai" : "scripted"},
        {"endpoint", cfg.chat.endpoint},
        {"model", cfg.chat.model},
        {"auth_env", cfg.chat.auth_env},
        {"max_in_flight", cfg.chat.max_in_flight},
        {"requests_per_second", cfg.chat.requests_per_second},
        {"script", cfg.chat.script.string()}}},
      {"cache_dir", cfg.cache_dir.string()},
      {"corpus", cfg.corpus_path.string()},
      {"gold", opt_path(cfg.gold_path)},
      {"output_dir", cfg.output_dir.string()},
      {"workers", cfg.workers},
      {"match_mode", to_string(cfg.match_mode)}};
  cfg.canonical_json = canonical.dump();
  return cfg;
}

RunConfig load_config(const fs::path& path,
                      const std::vector<ConfigOverride>& overrides,
                      bool check_paths) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file: " + path.string()});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path(), overrides, check_paths);
}

std::string config_hash(const RunConfig& config) {
  return sha256_hex(config.canonical_json);
}

}  // namespace conrec
