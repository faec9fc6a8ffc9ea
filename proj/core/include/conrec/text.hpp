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

#ifndef CONREC_TEXT_HPP_
#define CONREC_TEXT_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace conrec {

// A UTF-8 string addressed by Unicode scalar-value offsets. All document
// offsets in conrec are character offsets into a Text, never byte offsets.
class Text {
 public:
  Text() : byte_offsets_{0} {}
  // Throws ParseError when utf8 is not valid UTF-8.
  explicit Text(std::string utf8);

  const std::string& str() const { return utf8_; }
  std::size_t length() const { return code_points_.size(); }
  bool empty() const { return code_points_.empty(); }

  char32_t at(std::size_t i) const { return code_points_[i]; }

  // UTF-8 bytes of characters [start, end).
  std::string_view slice(std::size_t start, std::size_t end) const;

  std::size_t byte_offset(std::size_t char_offset) const {
    return byte_offsets_[char_offset];
  }

 private:
  std::string utf8_;
  std::vector<char32_t> code_points_;
  std::vector<std::size_t> byte_offsets_;  // length() + 1 entries
};

// Decodes UTF-8; throws ParseError on malformed sequences.
std::u32string decode_utf8(std::string_view utf8);
std::string encode_utf8(std::u32string_view text);
bool is_valid_utf8(std::string_view utf8);

bool is_space(char32_t c);
bool is_punct(char32_t c);
char32_t to_lower(char32_t c);

// Lowercasing is length-preserving in characters, so offsets computed on the
// original text stay valid for the lowered text.
std::string to_lower(std::string_view utf8);

// Lowercase, trim, and collapse runs of whitespace to a single space.
std::string normalize_alias(std::string_view utf8);

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);

}  // namespace conrec

#endif  // CONREC_TEXT_HPP_
