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

#include "conrec/postprocess.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace conrec {
namespace {

bool is_direct(const LinkedMention& m) {
  return m.provenance == Provenance::kDirectRetrieval;
}

// True when a should survive over b.
bool better(const LinkedMention& a, const LinkedMention& b,
            ResolutionPolicy policy) {
  if (policy == ResolutionPolicy::kHighestScore) {
    if (is_direct(a) != is_direct(b)) return is_direct(a);
    if (is_direct(a) && a.score != b.score) return a.score > b.score;
    if (a.span.length() != b.span.length()) {
      return a.span.length() > b.span.length();
    }
  } else {
    if (a.span.length() != b.span.length()) {
      return a.span.length() > b.span.length();
    }
    if (is_direct(a) != is_direct(b)) return is_direct(a);
    if (a.score != b.score) return a.score > b.score;
  }
  return a.span.start < b.span.start;
}

}  // namespace

ResolutionPolicy policy_for(Strategy strategy) {
  return strategy == Strategy::kRuleBased ? ResolutionPolicy::kHighestScore
                                          : ResolutionPolicy::kLongestSpan;
}

std::vector<LinkedMention> resolve_overlaps(
    const std::vector<LinkedMention>& mentions, ResolutionPolicy policy) {
  std::map<std::string_view, std::vector<std::size_t>> by_concept;
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    by_concept[mentions[i].concept_id].push_back(i);
  }

  std::vector<LinkedMention> out;
  out.reserve(mentions.size());
  for (auto& [concept_id, idx] : by_concept) {
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return std::tie(mentions[a].span.start, mentions[a].span.end) <
             std::tie(mentions[b].span.start, mentions[b].span.end);
    });
    // Components of the interval-overlap graph: a sweep that keeps the
    // running maximum end joins every span that starts before it.
    std::size_t winner = idx.front();
    std::size_t reach = mentions[winner].span.end;
    for (std::size_t n = 1; n < idx.size(); ++n) {
      const LinkedMention& m = mentions[idx[n]];
      if (m.span.start < reach) {
        if (better(m, mentions[winner], policy)) winner = idx[n];
        reach = std::max(reach, m.span.end);
      } else {
        out.push_back(mentions[winner]);
        winner = idx[n];
        reach = m.span.end;
      }
    }
    out.push_back(mentions[winner]);
  }

  std::sort(out.begin(), out.end(),
            [](const LinkedMention& a, const LinkedMention& b) {
              return std::tie(a.span.start, a.span.end, a.concept_id) <
                     std::tie(b.span.start, b.span.end, b.concept_id);
            });
  return out;
}

}  // namespace conrec
