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

#include "conrec/extraction.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "conrec/error.hpp"

namespace conrec {

namespace detail {
extern const std::string_view kDefaultFunctionWords;
}  // namespace detail

namespace {

// Lowercased words that end in '.' without ending a sentence.
const std::unordered_set<std::string>& abbreviations() {
  static const std::unordered_set<std::string> kAbbreviations = {
      "e.g", "i.e", "dr", "mr", "mrs", "ms", "prof", "vs", "approx",
      "fig", "figs", "cf", "al", "st", "jr", "sr", "resp", "ca", "incl"};
  return kAbbreviations;
}

bool is_sentence_terminal(char32_t c) {
  return c == U'.' || c == U'?' || c == U'!';
}

bool is_closing(char32_t c) {
  return c == U'"' || c == U'\'' || c == U')' || c == U']' || c == 0x2019 ||
         c == 0x201D;
}

bool is_letter(char32_t c) {
  return (c >= U'a' && c <= U'z') || (c >= U'A' && c <= U'Z') ||
         (c >= 0x00C0 && c <= 0x024F && c != 0x00D7 && c != 0x00F7);
}

// Whether the '.' at dot ends an abbreviation rather than a sentence.
bool ends_abbreviation(const Text& text, std::size_t sentence_start,
                       std::size_t dot) {
  std::size_t w = dot;
  while (w > sentence_start && !is_space(text.at(w - 1))) --w;
  while (w < dot && (text.at(w) == U'(' || text.at(w) == U'[' ||
                     text.at(w) == U'"')) {
    ++w;
  }
  if (w == dot) return false;
  if (dot - w == 1 && is_letter(text.at(w))) return true;
  return abbreviations().contains(to_lower(text.slice(w, dot)));
}

const std::unordered_set<std::string>& split_conjunctions() {
  static const std::unordered_set<std::string> kConjunctions = {"and", "or",
                                                                "but"};
  return kConjunctions;
}

Token make_token(const Text& text, std::size_t start, std::size_t end,
                 bool punct, const FunctionWordLexicon& lexicon) {
  Token t;
  t.text = std::string(text.slice(start, end));
  t.start = start;
  t.end = end;
  t.is_punctuation = punct;
  t.is_function_word = !punct && lexicon.contains(t.text);
  return t;
}

using SpanKey = std::pair<std::size_t, std::size_t>;

std::vector<EntitySpan> spans_in_window(const Document& doc, std::size_t start,
                                        std::size_t end, Strategy strategy,
                                        const FunctionWordLexicon& lexicon) {
  const std::vector<Token> tokens = tokenize(doc.text, start, end, lexicon);
  return boundary_filter(enumerate_ngrams(tokens, doc, strategy), tokens);
}

std::size_t parse_offset(std::string_view s, std::size_t line_no) {
  std::size_t v = 0;
  s = trim(s);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("bad offset '" + std::string(s) + "'", line_no);
  }
  return v;
}

}  // namespace

std::string_view to_string(Strategy s) {
  return s == Strategy::kRuleBased ? "rule_based" : "segment_based";
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "rule_based") return Strategy::kRuleBased;
  if (s == "segment_based") return Strategy::kSegmentBased;
  throw Error("unknown extraction strategy: " + std::string(s));
}

FunctionWordLexicon::FunctionWordLexicon(std::unordered_set<std::string> words)
    : words_(std::move(words)) {}

FunctionWordLexicon FunctionWordLexicon::load(std::istream& in) {
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view w = trim(line);
    if (w.empty() || w.front() == '#') continue;
    words.insert(to_lower(w));
  }
  return FunctionWordLexicon(std::move(words));
}

FunctionWordLexicon FunctionWordLexicon::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open lexicon file: " + path);
  return load(in);
}

const FunctionWordLexicon& FunctionWordLexicon::builtin() {
  static const FunctionWordLexicon kBuiltin = [] {
    std::istringstream in{std::string(detail::kDefaultFunctionWords)};
    return load(in);
  }();
  return kBuiltin;
}

bool FunctionWordLexicon::contains(std::string_view word) const {
  return words_.contains(to_lower(word));
}

std::vector<CharRange> split_sentences(const Text& text) {
  std::vector<CharRange> sentences;
  const std::size_t n = text.length();
  std::size_t i = 0;
  while (i < n) {
    while (i < n && is_space(text.at(i))) ++i;
    if (i >= n) break;
    const std::size_t start = i;
    std::size_t end = n;
    std::size_t j = start;
    while (j < n) {
      const char32_t c = text.at(j);
      if (c == U'\n') {
        end = j;
        break;
      }
      if (!is_sentence_terminal(c)) {
        ++j;
        continue;
      }
      std::size_t k = j + 1;
      while (k < n && (is_sentence_terminal(text.at(k)) || is_closing(text.at(k)))) {
        ++k;
      }
      const bool at_break = k == n || is_space(text.at(k));
      const bool abbreviation =
          c == U'.' && k == j + 1 && ends_abbreviation(text, start, j);
      if (at_break && !abbreviation) {
        end = k;
        break;
      }
      j = k;
    }
    std::size_t trimmed = end;
    while (trimmed > start && is_space(text.at(trimmed - 1))) --trimmed;
    if (trimmed > start) sentences.push_back({start, trimmed});
    i = end;
  }
  return sentences;
}

std::vector<Token> tokenize(const Text& text, std::size_t start,
                            std::size_t end,
                            const FunctionWordLexicon& lexicon) {
  std::vector<Token> tokens;
  std::size_t i = start;
  while (i < end) {
    if (is_space(text.at(i))) {
      ++i;
      continue;
    }
    std::size_t chunk_end = i;
    while (chunk_end < end && !is_space(text.at(chunk_end))) ++chunk_end;

    std::size_t p = i;
    while (p < chunk_end && is_punct(text.at(p))) {
      tokens.push_back(make_token(text, p, p + 1, true, lexicon));
      ++p;
    }
    std::size_t q = chunk_end;
    while (q > p && is_punct(text.at(q - 1))) --q;
    if (p < q) tokens.push_back(make_token(text, p, q, false, lexicon));
    for (std::size_t r = q; r < chunk_end; ++r) {
      tokens.push_back(make_token(text, r, r + 1, true, lexicon));
    }
    i = chunk_end;
  }
  return tokens;
}

std::vector<Token> tokenize(const Text& text,
                            const FunctionWordLexicon& lexicon) {
  return tokenize(text, 0, text.length(), lexicon);
}

std::vector<EntitySpan> enumerate_ngrams(const std::vector<Token>& tokens,
                                         const Document& doc,
                                         Strategy strategy, std::size_t n_min,
                                         std::size_t n_max) {
  std::vector<EntitySpan> spans;
  const std::size_t k = tokens.size();
  if (n_min == 0) n_min = 1;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t n = n_min; n <= n_max && i + n <= k; ++n) {
      EntitySpan s;
      s.doc_id = doc.doc_id;
      s.start = tokens[i].start;
      s.end = tokens[i + n - 1].end;
      s.text = to_lower(doc.text.slice(s.start, s.end));
      s.strategy = strategy;
      spans.push_back(std::move(s));
    }
  }
  return spans;
}

std::vector<EntitySpan> boundary_filter(const std::vector<EntitySpan>& spans,
                                        const std::vector<Token>& tokens) {
  std::unordered_map<std::size_t, const Token*> by_start;
  std::unordered_map<std::size_t, const Token*> by_end;
  for (const Token& t : tokens) {
    by_start.emplace(t.start, &t);
    by_end.emplace(t.end, &t);
  }
  const auto flagged = [](const Token* t) {
    return t->is_punctuation || t->is_function_word;
  };
  std::vector<EntitySpan> kept;
  kept.reserve(spans.size());
  for (const EntitySpan& s : spans) {
    const auto first = by_start.find(s.start);
    const auto last = by_end.find(s.end);
    if (first == by_start.end() || last == by_end.end()) {
      throw Error("span [" + std::to_string(s.start) + ", " +
                  std::to_string(s.end) + ") does not align with tokens");
    }
    if (!flagged(first->second) && !flagged(last->second)) kept.push_back(s);
  }
  return kept;
}

std::vector<Segment> split_segments(const Document& doc,
                                    const std::vector<CharRange>& sentences,
                                    const std::vector<Segment>& external,
                                    const FunctionWordLexicon& lexicon) {
  std::map<SpanKey, Segment> unique;
  for (const Segment& s : external) {
    if (s.start >= s.end || s.end > doc.text.length()) {
      throw Error("segment [" + std::to_string(s.start) + ", " +
                  std::to_string(s.end) + ") outside document " + doc.doc_id +
                  " of length " + std::to_string(doc.text.length()));
    }
    Segment seg = s;
    seg.doc_id = doc.doc_id;
    seg.source = SegmentSource::kExternalTagger;
    unique.emplace(SpanKey{s.start, s.end}, std::move(seg));
  }

  for (const CharRange& sentence : sentences) {
    const std::vector<Token> tokens =
        tokenize(doc.text, sentence.start, sentence.end, lexicon);
    std::optional<std::size_t> piece_start;
    std::size_t piece_end = 0;
    const auto flush = [&] {
      if (piece_start) {
        unique.emplace(SpanKey{*piece_start, piece_end},
                       Segment{doc.doc_id, *piece_start, piece_end,
                               SegmentSource::kPunctuationSplit});
      }
      piece_start.reset();
    };
    for (const Token& t : tokens) {
      if (t.is_punctuation || split_conjunctions().contains(to_lower(t.text))) {
        flush();
        continue;
      }
      if (!piece_start) piece_start = t.start;
      piece_end = t.end;
    }
    flush();
  }

  std::vector<Segment> segments;
  segments.reserve(unique.size());
  for (auto& [key, seg] : unique) segments.push_back(std::move(seg));
  return segments;
}

std::vector<EntitySpan> extract_rule_based(const Document& doc,
                                           const FunctionWordLexicon& lexicon) {
  std::vector<EntitySpan> spans;
  for (const CharRange& s : split_sentences(doc.text)) {
    auto part =
        spans_in_window(doc, s.start, s.end, Strategy::kRuleBased, lexicon);
    spans.insert(spans.end(), std::make_move_iterator(part.begin()),
                 std::make_move_iterator(part.end()));
  }
  std::stable_sort(spans.begin(), spans.end(),
                   [](const EntitySpan& a, const EntitySpan& b) {
                     return std::tie(a.start, a.end) < std::tie(b.start, b.end);
                   });
  return spans;
}

std::vector<EntitySpan> extract_segment_based(
    const Document& doc, const std::vector<Segment>& external,
    const FunctionWordLexicon& lexicon) {
  const std::vector<Segment> segments =
      split_segments(doc, split_sentences(doc.text), external, lexicon);
  std::map<SpanKey, EntitySpan> unique;
  for (const Segment& seg : segments) {
    for (EntitySpan& s : spans_in_window(doc, seg.start, seg.end,
                                         Strategy::kSegmentBased, lexicon)) {
      unique.emplace(SpanKey{s.start, s.end}, std::move(s));
    }
  }
  std::vector<EntitySpan> spans;
  spans.reserve(unique.size());
  for (auto& [key, s] : unique) spans.push_back(std::move(s));
  return spans;
}

SegmentTable load_segments(std::istream& in) {
  SegmentTable table;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty() || raw.front() == '#') continue;
    const auto cols = split(raw, '\t');
    if (cols.size() != 3) {
      throw ParseError("segment rows need doc_id<TAB>start<TAB>end", line_no);
    }
    Segment seg;
    seg.doc_id = std::string(trim(cols[0]));
    seg.start = parse_offset(cols[1], line_no);
    seg.end = parse_offset(cols[2], line_no);
    seg.source = SegmentSource::kExternalTagger;
    if (seg.doc_id.empty() || seg.start >= seg.end) {
      throw ParseError("segment needs a doc_id and start < end", line_no);
    }
    table[seg.doc_id].push_back(std::move(seg));
  }
  return table;
}

SegmentTable load_segments_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open segments file: " + path);
  return load_segments(in);
}

}  // namespace conrec
