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

#ifndef CONREC_SRC_HTTP_UTIL_HPP_
#define CONREC_SRC_HTTP_UTIL_HPP_

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace conrec::detail {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path;  // begins with '/'
};

// Throws Error for anything other than http(s)://host[:port][/path].
ParsedUrl parse_url(const std::string& url);

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{60};
};

using HeaderList = std::vector<std::pair<std::string, std::string>>;

// POSTs a JSON body and returns the 2xx response body. Transport errors,
// 429 and 5xx are retried with doubling backoff; other statuses fail at
// once. Throws BackendError carrying the last status (0 = no response).
std::string post_json(const std::string& url, const std::string& body,
                      const HeaderList& headers, const RetryPolicy& policy,
                      const std::string& what);

}  // namespace conrec::detail

#endif  // CONREC_SRC_HTTP_UTIL_HPP_
