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
#ifndef CONREC_LINKING_HPP_
#define CONREC_LINKING_HPP_

#include <atomic>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "conrec/extraction.hpp"
#include "conrec/ontology.hpp"
#include "conrec/retrieval.hpp"

namespace conrec {

struct PromptPair {
  std::string system;
  std::string user;

  bool operator==(const PromptPair&) const = default;
};

enum class Confidence { kHigh, kMedium, kLow };

std::string_view to_string(Confidence c);

struct LinkVerdict {
  std::optional<std::string> answer;  // nullopt for "None"
  Confidence confidence = Confidence::kLow;
  std::string raw;
};

enum class Provenance { kDirectRetrieval, kLlmLinked };

std::string_view to_string(Provenance p);
Provenance provenance_from_string(std::string_view s);

struct LinkedMention {
  EntitySpan span;
  std::string concept_id;
  Provenance provenance = Provenance::kDirectRetrieval;
  // Cosine similarity for direct links. For model links it is the retrieval
  // score of the chosen candidate and is not used for ranking.
  double score = 0.0;
  // Set only for model links; always HIGH for emitted mentions.
  std::optional<Confidence> confidence;

  bool operator==(const LinkedMention&) const = default;
};

// Renders the linking prompt. Candidate blocks follow the given order.
// Throws Error when a candidate ID is not in the ontology or the list is
// empty.
PromptPair build_prompt(const EntitySpan& entity,
                        const std::vector<Candidate>& candidates,
                        const Ontology& ontology);

// Scans case-insensitively for the first "answer:" and "confidence:" and
// takes the first word after each. Throws MalformedReplyError.
LinkVerdict parse_reply(std::string_view raw);

// Chat-completion backend. complete() returns the assistant text.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string model_id() const = 0;
  virtual std::string complete(const PromptPair& prompt) = 0;
};

// Reply memo keyed by SHA-256(model, system, user). With a path, entries are
// appended to a JSON-lines file and reloaded on construction. Thread-safe.
class ReplyCache {
 public:
  ReplyCache() = default;  // in-memory only
  explicit ReplyCache(std::filesystem::path file);

  static std::string key(std::string_view model, const PromptPair& prompt);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const std::string& reply);
  std::size_t size() const;
  const std::optional<std::filesystem::path>& file() const { return file_; }

 private:
  std::optional<std::filesystem::path> file_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::string> replies_;
};

// Returns the cached reply, or calls the client and stores the result.
// Transport errors only surface on a cache miss.
std::string cached_call(ChatClient& client, ReplyCache& cache,
                        const PromptPair& prompt);

struct LinkStats {
  std::size_t direct = 0;
  std::size_t model_calls = 0;  // prompts issued, cached or not
  std::size_t accepted = 0;
  std::size_t rejected_confidence = 0;
  std::size_t rejected_none = 0;
  std::size_t rejected_out_of_candidates = 0;
  std::size_t malformed = 0;
};

class Linker {
 public:
  // cache may be null.
  Linker(const Ontology& ontology, ChatClient& client, ReplyCache* cache);

  // Direct decisions bypass the model. Ambiguous decisions are prompted and
  // kept only for a HIGH-confidence answer among the offered candidates.
  // Transport failures propagate as BackendError.
  std::optional<LinkedMention> link(const EntitySpan& entity,
                                    const RetrievalDecision& decision);

  LinkStats stats() const;

 private:
  const Ontology& ontology_;
  ChatClient& client_;
  ReplyCache* cache_;
  std::atomic<std::size_t> direct_{0};
  std::atomic<std::size_t> model_calls_{0};
  std::atomic<std::size_t> accepted_{0};
  std::atomic<std::size_t> rejected_confidence_{0};
  std::atomic<std::size_t> rejected_none_{0};
  std::atomic<std::size_t> rejected_out_of_candidates_{0};
  std::atomic<std::size_t> malformed_{0};
};

}  // namespace conrec

#endif  // CONREC_LINKING_HPP_
