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
#ifndef CONREC_CHAT_CLIENT_HPP_
#define CONREC_CHAT_CLIENT_HPP_

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "conrec/linking.hpp"

namespace conrec {

// Token bucket: rate tokens per second, up to burst stored.
class RateLimiter {
 public:
  RateLimiter(double rate_per_second, double burst);
  void acquire();

 private:
  using Clock = std::chrono::steady_clock;
  std::mutex mu_;
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
};

struct OpenAiChatOptions {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model = "gpt-4o-mini";
  std::string api_key;  // resolved from the environment by the caller
  std::size_t max_in_flight = 4;
  double requests_per_second = 5.0;
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{120};
};

// OpenAI-compatible chat completions at temperature 0.
class OpenAiChatClient : public ChatClient {
 public:
  explicit OpenAiChatClient(OpenAiChatOptions options);
  ~OpenAiChatClient() override;

  std::string model_id() const override { return options_.model; }
  std::string complete(const PromptPair& prompt) override;

  static std::string request_body(const std::string& model,
                                  const PromptPair& prompt);
  // Pulls choices[0].message.content out of a response body.
  static std::string extract_content(const std::string& body);

 private:
  OpenAiChatOptions options_;
  RateLimiter limiter_;
  struct Gate;
  std::unique_ptr<Gate> gate_;
};

// Offline backend answering from a table keyed by entity label. Counts
// every call.
class ScriptedChatClient : public ChatClient {
 public:
  using Responder = std::function<std::string(const PromptPair&)>;

  ScriptedChatClient(std::map<std::string, std::string> replies,
                     std::string default_reply,
                     std::string model = "scripted");
  explicit ScriptedChatClient(Responder responder,
                              std::string model = "scripted");

  // JSON: {"model": "...", "default": "...", "replies": {label: reply}}.
  static std::unique_ptr<ScriptedChatClient> load_file(const std::string& path);

  std::string model_id() const override { return model_; }
  std::string complete(const PromptPair& prompt) override;
  std::size_t calls() const { return calls_.load(); }

  // The text after "label: " on the user prompt's last line.
  static std::string entity_label(const PromptPair& prompt);

 private:
  Responder responder_;
  std::string model_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace conrec

#endif  // CONREC_CHAT_CLIENT_HPP_
