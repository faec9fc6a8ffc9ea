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
#ifndef CONREC_CONFIG_HPP_
#define CONREC_CONFIG_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "conrec/embedding.hpp"
#include "conrec/evaluation.hpp"
#include "conrec/extraction.hpp"
#include "conrec/retrieval.hpp"

namespace conrec {

enum class ChatKind { kOpenAi, kScripted };

struct ChatSpec {
  ChatKind kind = ChatKind::kOpenAi;
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  // Name of the environment variable holding the bearer token. Tokens are
  // never read from the config file itself.
  std::string auth_env = "OPENAI_API_KEY";
  std::size_t max_in_flight = 4;
  double requests_per_second = 5.0;
  std::filesystem::path script;  // kScripted only
};

struct RunConfig {
  std::filesystem::path ontology_path;
  std::optional<std::string> root_id;
  std::optional<std::filesystem::path> xref_synonyms_path;
  std::optional<std::string> ontology_label;

  Strategy strategy = Strategy::kRuleBased;
  std::optional<std::filesystem::path> lexicon_path;
  std::optional<std::filesystem::path> segments_path;

  EmbedderSpec embedder;
  Thresholds thresholds;
  ChatSpec chat;

  std::filesystem::path cache_dir;
  std::filesystem::path corpus_path;
  std::optional<std::filesystem::path> gold_path;
  std::filesystem::path output_dir;
  std::optional<std::filesystem::path> index_path;

  std::size_t workers = 4;
  MatchMode match_mode = MatchMode::kOneToOne;

  // Fully resolved configuration, serialized with sorted keys. Hashing this
  // gives the manifest's config hash.
  std::string canonical_json;

  std::filesystem::path resolved_index_path() const;
};

// Dotted key (e.g. "retrieval.tau1") and raw value. Values that parse as
// JSON are used as such, anything else as a string.
using ConfigOverride = std::pair<std::string, std::string>;

// Validates the whole document and throws ConfigError listing every failing
// field. Relative paths resolve against base_dir. Unknown fields are
// rejected. With check_paths, every input path must exist.
RunConfig parse_config(std::string_view json_text,
                       const std::filesystem::path& base_dir,
                       const std::vector<ConfigOverride>& overrides = {},
                       bool check_paths = true);
RunConfig load_config(const std::filesystem::path& path,
                      const std::vector<ConfigOverride>& overrides = {},
                      bool check_paths = true);

std::string config_hash(const RunConfig& config);

}  // namespace conrec

#endif  // CONREC_CONFIG_HPP_
