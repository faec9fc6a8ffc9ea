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

#include "http_util.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <thread>

#include "conrec/error.hpp"

namespace conrec::detail {

ParsedUrl parse_url(const std::string& url) {
  const std::size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("URL without scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error("unsupported URL scheme: " + url);
  }
  const std::size_t host_start = scheme_end + 3;
  const std::size_t path_start = url.find('/', host_start);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.base = url;
    out.path = "/";
  } else {
    out.base = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  if (out.base.size() <= host_start) throw Error("URL without host: " + url);
  return out;
}

std::string post_json(const std::string& url, const std::string& body,
                      const HeaderList& headers, const RetryPolicy& policy,
                      const std::string& what) {
  const ParsedUrl parsed = parse_url(url);
  httplib::Client client(parsed.base);
  client.set_connection_timeout(policy.timeout);
  client.set_read_timeout(policy.timeout);
  client.set_write_timeout(policy.timeout);
  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  int last_status = 0;
  std::string last_error;
  auto backoff = policy.initial_backoff;
  const int attempts = std::max(1, policy.attempts);
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post(parsed.path, hdrs, body, "application/json");
    if (res) {
      last_status = res->status;
      if (res->status >= 200 && res->status < 300) return res->body;
      last_error = "HTTP " + std::to_string(res->status);
      const bool retriable = res->status == 429 || res->status >= 500;
      if (!retriable) break;
    } else {
      last_status = 0;
      last_error = httplib::to_string(res.error());
    }
    if (attempt < attempts) {
      spdlog::warn("{} request to {} failed ({}), retry {}/{} in {} ms", what,
                   url, last_error, attempt, attempts - 1, backoff.count());
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw BackendError(what + " request to " + url + " failed: " + last_error,
                     last_status);
}

}  // namespace conrec::detail
