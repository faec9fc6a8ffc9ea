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

#ifndef CONREC_ERROR_HPP_
#define CONREC_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <vector>

namespace conrec {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file. line() is 1-based, 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Configuration failed validation. Carries every problem found, not just
// the first one.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Remote backend (embedding service or chat model) failed. status() is the
// last HTTP status seen, or 0 for transport-level failures.
class BackendError : public Error {
 public:
  BackendError(const std::string& what, int status)
      : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

// Precomputed-vector backend has no vector for the requested text.
class LookupMissError : public Error {
 public:
  explicit LookupMissError(const std::string& text)
      : Error("no precomputed vector for text: \"" + text + "\""), text_(text) {}
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

// Chat reply does not follow the answer/confidence grammar.
class MalformedReplyError : public Error {
 public:
  using Error::Error;
};

// Index file is truncated, has the wrong magic/version, or fails its
// content-hash check.
class IndexFormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace conrec

#endif  // CONREC_ERROR_HPP_
