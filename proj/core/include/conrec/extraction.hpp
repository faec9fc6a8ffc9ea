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
#ifndef CONREC_EXTRACTION_HPP_
#define CONREC_EXTRACTION_HPP_

#include <cstddef>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "conrec/text.hpp"

namespace conrec {

struct Document {
  std::string doc_id;
  Text text;
};

enum class Strategy { kRuleBased, kSegmentBased };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

struct Token {
  std::string text;  // original case
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  bool is_function_word = false;
  bool is_punctuation = false;
};

struct EntitySpan {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;  // lowercased document slice
  Strategy strategy = Strategy::kRuleBased;

  std::size_t length() const { return end - start; }
  bool operator==(const EntitySpan&) const = default;
};

enum class SegmentSource { kExternalTagger, kPunctuationSplit };

struct Segment {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  SegmentSource source = SegmentSource::kPunctuationSplit;
};

struct CharRange {
  std::size_t start = 0;
  std::size_t end = 0;
  bool operator==(const CharRange&) const = default;
};

// Closed-class word list (prepositions, conjunctions, determiners,
// auxiliaries). Lookups are case-insensitive.
class FunctionWordLexicon {
 public:
  FunctionWordLexicon() = default;
  explicit FunctionWordLexicon(std::unordered_set<std::string> words);

  // One token per line; blank lines and lines starting with '#' skipped.
  static FunctionWordLexicon load(std::istream& in);
  static FunctionWordLexicon load_file(const std::string& path);
  // The list compiled in from data/function_words.txt.
  static const FunctionWordLexicon& builtin();

  bool contains(std::string_view word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

inline constexpr std::size_t kMinNgram = 2;
inline constexpr std::size_t kMaxNgram = 10;

std::vector<CharRange> split_sentences(const Text& text);

// Tokens of text[start, end), offsets relative to text.
std::vector<Token> tokenize(const Text& text, std::size_t start,
                            std::size_t end,
                            const FunctionWordLexicon& lexicon);
std::vector<Token> tokenize(const Text& text,
                            const FunctionWordLexicon& lexicon);

// Every contiguous token run of n_min..n_max tokens, ordered by start then
// length.
std::vector<EntitySpan> enumerate_ngrams(const std::vector<Token>& tokens,
                                         const Document& doc,
                                         Strategy strategy,
                                         std::size_t n_min = kMinNgram,
                                         std::size_t n_max = kMaxNgram);

// Drops spans whose first or last token is punctuation or a function word.
std::vector<EntitySpan> boundary_filter(const std::vector<EntitySpan>& spans,
                                        const std::vector<Token>& tokens);

// Union of external segments and sentence pieces split at punctuation and
// coordinating conjunctions, deduplicated by offsets, ordered by offsets.
// Throws Error when an external segment lies outside the document.
std::vector<Segment> split_segments(const Document& doc,
                                    const std::vector<CharRange>& sentences,
                                    const std::vector<Segment>& external,
                                    const FunctionWordLexicon& lexicon);

std::vector<EntitySpan> extract_rule_based(const Document& doc,
                                           const FunctionWordLexicon& lexicon);
std::vector<EntitySpan> extract_segment_based(
    const Document& doc, const std::vector<Segment>& external,
    const FunctionWordLexicon& lexicon);

// Segment standoff TSV: doc_id<TAB>start<TAB>end. Grouped by doc_id.
using SegmentTable = std::map<std::string, std::vector<Segment>, std::less<>>;
SegmentTable load_segments(std::istream& in);
SegmentTable load_segments_file(const std::string& path);

}  // namespace conrec

#endif  // CONREC_EXTRACTION_HPP_
