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

#include "conrec/linking.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>

#include "conrec/error.hpp"
#include "conrec/hashing.hpp"
#include "conrec/text.hpp"

namespace conrec {
namespace {

constexpr std::string_view kSystemPreamble =
    "As an expert clinician, your task is to accurately link the entity using "
    "the concepts listed below. Accuracy is paramount. If the entity does not "
    "precisely refer to any of the concepts listed below, please return "
    "\"None\"; otherwise, return the corresponding concept ID in the "
    "following format:\n"
    "answer:<concept ID or None>\n"
    "confidence:<one of HIGH, LOW, MEDIUM>\n"
    "\n"
    "Here are the concepts:\n";

constexpr std::string_view kUserPreamble = "Here is the entity to link:\nlabel: ";

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

// First word after marker, with markdown/quote decoration stripped. Empty
// optional when the marker is absent.
std::optional<std::string> field_after(std::string_view raw,
                                       std::string_view lowered,
                                       std::string_view marker) {
  const std::size_t pos = lowered.find(marker);
  if (pos == std::string_view::npos) return std::nullopt;
  std::string_view rest = raw.substr(pos + marker.size());
  rest = rest.substr(0, rest.find('\n'));
  constexpr std::string_view kLead = " \t\r*`\"'<[";
  constexpr std::string_view kTrail = " \t\r*`\"'>].,;:";
  const std::size_t b = rest.find_first_not_of(kLead);
  if (b == std::string_view::npos) return std::string();
  rest = rest.substr(b);
  rest = rest.substr(0, rest.find_first_of(" \t\r"));
  while (!rest.empty() && kTrail.find(rest.back()) != std::string_view::npos) {
    rest.remove_suffix(1);
  }
  return std::string(rest);
}

}  // namespace

std::string_view to_string(Confidence c) {
  switch (c) {
    case Confidence::kHigh: return "HIGH";
    case Confidence::kMedium: return "MEDIUM";
    case Confidence::kLow: return "LOW";
  }
  return "LOW";
}

std::string_view to_string(Provenance p) {
  return p == Provenance::kDirectRetrieval ? "direct_retrieval" : "llm_linked";
}

Provenance provenance_from_string(std::string_view s) {
  if (s == "direct_retrieval") return Provenance::kDirectRetrieval;
  if (s == "llm_linked") return Provenance::kLlmLinked;
  throw Error("unknown provenance: " + std::string(s));
}

PromptPair build_prompt(const EntitySpan& entity,
                        const std::vector<Candidate>& candidates,
                        const Ontology& ontology) {
  if (candidates.empty()) throw Error("cannot build a prompt without candidates");
  std::vector<std::string> blocks;
  blocks.reserve(candidates.size());
  for (const Candidate& cand : candidates) {
    const Concept* c = ontology.find(cand.concept_id);
    if (c == nullptr) {
      throw Error("candidate concept not in ontology: " + cand.concept_id);
    }
    std::string block = "id: " + c->id + "\nname: " + c->name;
    if (c->definition && !c->definition->empty()) {
      block += "\ndefinition: " + *c->definition;
    }
    if (!c->synonyms.empty()) {
      std::vector<std::string> syns;
      for (const Synonym& s : c->synonyms) syns.push_back(s.text);
      block += "\nsynonyms: " + join(syns, ", ");
    }
    if (!c->xref_synonyms.empty()) {
      block += "\numls_synonyms: " + join(c->xref_synonyms, ", ");
    }
    blocks.push_back(std::move(block));
  }
  PromptPair p;
  p.system = std::string(kSystemPreamble) + join(blocks, "\n\n");
  p.user = std::string(kUserPreamble) + entity.text;
  return p;
}

LinkVerdict parse_reply(std::string_view raw) {
  const std::string lowered = ascii_lower(raw);
  const auto answer = field_after(raw, lowered, "answer:");
  if (!answer) throw MalformedReplyError("reply has no answer: line");
  if (answer->empty()) throw MalformedReplyError("reply has an empty answer");
  const auto confidence = field_after(raw, lowered, "confidence:");
  if (!confidence) throw MalformedReplyError("reply has no confidence: line");

  LinkVerdict v;
  v.raw = std::string(raw);
  if (ascii_lower(*answer) != "none") v.answer = *answer;
  std::string tier = *confidence;
  for (char& c : tier) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  if (tier == "HIGH") {
    v.confidence = Confidence::kHigh;
  } else if (tier == "MEDIUM") {
    v.confidence = Confidence::kMedium;
  } else if (tier == "LOW") {
    v.confidence = Confidence::kLow;
  } else {
    throw MalformedReplyError("confidence is not HIGH, MEDIUM or LOW: '" +
                              *confidence + "'");
  }
  return v;
}

ReplyCache::ReplyCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(*file_);
  if (!in) return;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      replies_[j.at("key").get<std::string>()] = j.at("reply").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      spdlog::warn("skipping unreadable reply cache line {} in {}", line_no,
                   file_->string());
    }
  }
}

std::string ReplyCache::key(std::string_view model, const PromptPair& prompt) {
  Sha256 h;
  h.update_field(model);
  h.update_field(prompt.system);
  h.update_field(prompt.user);
  return h.hex_digest();
}

std::optional<std::string> ReplyCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  const auto it = replies_.find(key);
  if (it == replies_.end()) return std::nullopt;
  return it->second;
}

void ReplyCache::put(const std::string& key, const std::string& reply) {
  std::lock_guard lock(mu_);
  if (!replies_.emplace(key, reply).second) return;
  if (!file_) return;
  std::ofstream out(*file_, std::ios::app);
  if (!out) throw Error("cannot append to reply cache " + file_->string());
  out << nlohmann::json{{"key", key}, {"reply", reply}}.dump() << '\n';
}

std::size_t ReplyCache::size() const {
  std::lock_guard lock(mu_);
  return replies_.size();
}

std::string cached_call(ChatClient& client, ReplyCache& cache,
                        const PromptPair& prompt) {
  const std::string k = ReplyCache::key(client.model_id(), prompt);
  if (auto hit = cache.get(k)) return *hit;
  std::string reply = client.complete(prompt);
  cache.put(k, reply);
  return reply;
}

Linker::Linker(const Ontology& ontology, ChatClient& client, ReplyCache* cache)
    : ontology_(ontology), client_(client), cache_(cache) {}

std::optional<LinkedMention> Linker::link(const EntitySpan& entity,
                                          const RetrievalDecision& decision) {
  switch (decision.kind) {
    case DecisionKind::kNoMatch:
      return std::nullopt;
    case DecisionKind::kDirect: {
      ++direct_;
      const Candidate& best = decision.candidates.front();
      return LinkedMention{entity, best.concept_id, Provenance::kDirectRetrieval,
                           best.score, std::nullopt};
    }
    case DecisionKind::kAmbiguous:
      break;
  }

  const PromptPair prompt = build_prompt(entity, decision.candidates, ontology_);
  ++model_calls_;
  const std::string reply = cache_ != nullptr ? cached_call(client_, *cache_, prompt)
                                              : client_.complete(prompt);
  LinkVerdict verdict;
  try {
    verdict = parse_reply(reply);
  } catch (const MalformedReplyError& e) {
    ++malformed_;
    spdlog::warn("malformed reply for \"{}\" in {}: {}", entity.text,
                 entity.doc_id, e.what());
    return std::nullopt;
  }
  if (!verdict.answer) {
    ++rejected_none_;
    return std::nullopt;
  }
  const auto chosen =
      std::find_if(decision.candidates.begin(), decision.candidates.end(),
                   [&](const Candidate& c) { return c.concept_id == *verdict.answer; });
  if (chosen == decision.candidates.end()) {
    ++rejected_out_of_candidates_;
    spdlog::warn("model answered {} for \"{}\", not among the offered candidates",
                 *verdict.answer, entity.text);
    return std::nullopt;
  }
  if (verdict.confidence != Confidence::kHigh) {
    ++rejected_confidence_;
    return std::nullopt;
  }
  ++accepted_;
  return LinkedMention{entity, chosen->concept_id, Provenance::kLlmLinked,
                       chosen->score, Confidence::kHigh};
}

LinkStats Linker::stats() const {
  LinkStats s;
  s.direct = direct_.load();
  s.model_calls = model_calls_.load();
  s.accepted = accepted_.load();
  s.rejected_confidence = rejected_confidence_.load();
  s.rejected_none = rejected_none_.load();
  s.rejected_out_of_candidates = rejected_out_of_candidates_.load();
  s.malformed = malformed_.load();
  return s;
}

}  // namespace conrec
