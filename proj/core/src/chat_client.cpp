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

#include "conrec/chat_client.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <semaphore>
#include <thread>

#include "conrec/error.hpp"
#include "http_util.hpp"

namespace conrec {

RateLimiter::RateLimiter(double rate_per_second, double burst)
    : rate_(rate_per_second),
      burst_(std::max(1.0, burst)),
      tokens_(std::max(1.0, burst)),
      last_(Clock::now()) {}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  std::unique_lock lock(mu_);
  while (true) {
    const auto now = Clock::now();
    const double elapsed = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    tokens_ = std::min(burst_, tokens_ + elapsed * rate_);
    if (tokens_ >= 1.0) {
      tokens_ -= 1.0;
      return;
    }
    const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    lock.unlock();
    std::this_thread::sleep_for(wait);
    lock.lock();
  }
}

struct OpenAiChatClient::Gate {
  explicit Gate(std::size_t n) : slots(static_cast<std::ptrdiff_t>(n)) {}
  std::counting_semaphore<1024> slots;
};

OpenAiChatClient::OpenAiChatClient(OpenAiChatOptions options)
    : options_(std::move(options)),
      limiter_(options_.requests_per_second,
               static_cast<double>(std::max<std::size_t>(1, options_.max_in_flight))) {
  options_.max_in_flight = std::clamp<std::size_t>(options_.max_in_flight, 1, 1024);
  detail::parse_url(options_.endpoint);
  gate_ = std::make_unique<Gate>(options_.max_in_flight);
}

OpenAiChatClient::~OpenAiChatClient() = default;

std::string OpenAiChatClient::request_body(const std::string& model,
                                           const PromptPair& prompt) {
  const nlohmann::json body = {
      {"model", model},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", prompt.system}},
                              {{"role", "user"}, {"content", prompt.user}}})},
      {"temperature", 0}};
  return body.dump();
}

std::string OpenAiChatClient::extract_content(const std::string& body) {
  try {
    const auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(
        std::string("chat response lacks choices[0].message.content: ") + e.what(),
        200);
  }
}

std::string OpenAiChatClient::complete(const PromptPair& prompt) {
  detail::HeaderList headers;
  if (!options_.api_key.empty()) {
    headers.emplace_back("Authorization", "Bearer " + options_.api_key);
  }
  limiter_.acquire();
  gate_->slots.acquire();
  std::string body;
  try {
    body = detail::post_json(
        options_.endpoint, request_body(options_.model, prompt), headers,
        {options_.attempts, options_.initial_backoff, options_.timeout}, "chat");
  } catch (...) {
    gate_->slots.release();
    throw;
  }
  gate_->slots.release();
  return extract_content(body);
}

ScriptedChatClient::ScriptedChatClient(std::map<std::string, std::string> replies,
                                       std::string default_reply,
                                       std::string model)
    : model_(std::move(model)) {
  responder_ = [replies = std::move(replies),
                default_reply = std::move(default_reply)](const PromptPair& p) {
    const auto it = replies.find(entity_label(p));
    return it == replies.end() ? default_reply : it->second;
  };
}

ScriptedChatClient::ScriptedChatClient(Responder responder, std::string model)
    : responder_(std::move(responder)), model_(std::move(model)) {}

std::unique_ptr<ScriptedChatClient> ScriptedChatClient::load_file(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open chat script: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("chat script " + path + " is not JSON: " + e.what());
  }
  if (!j.is_object()) throw ParseError("chat script must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (k != "model" && k != "default" && k != "replies") {
      throw ParseError("unknown field in chat script: " + k);
    }
  }
  try {
    std::map<std::string, std::string> replies;
    if (j.contains("replies")) {
      replies = j["replies"].get<std::map<std::string, std::string>>();
    }
    return std::make_unique<ScriptedChatClient>(std::move(replies),
                              j.value("default", "answer: None\nconfidence: LOW"),
                              j.value("model", "scripted"));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("bad chat script " + path + ": " + e.what());
  }
}

std::string ScriptedChatClient::complete(const PromptPair& prompt) {
  ++calls_;
  return responder_(prompt);
}

std::string ScriptedChatClient::entity_label(const PromptPair& prompt) {
  constexpr std::string_view kMarker = "label: ";
  const std::size_t pos = prompt.user.rfind(kMarker);
  if (pos == std::string::npos) return {};
  std::string label = prompt.user.substr(pos + kMarker.size());
  const std::size_t nl = label.find('\n');
  if (nl != std::string::npos) label.resize(nl);
  return label;
}

}  // namespace conrec
