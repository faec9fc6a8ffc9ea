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
#ifndef CONREC_POSTPROCESS_HPP_
#define CONREC_POSTPROCESS_HPP_

#include <vector>

#include "conrec/extraction.hpp"
#include "conrec/linking.hpp"

namespace conrec {

enum class ResolutionPolicy { kHighestScore, kLongestSpan };

ResolutionPolicy policy_for(Strategy strategy);

// Positive-length intersection; touching endpoints do not overlap.
inline bool overlaps(std::size_t a_start, std::size_t a_end,
                     std::size_t b_start, std::size_t b_end) {
  return a_start < b_end && b_start < a_end;
}

// Keeps one mention per connected component of same-concept overlapping
// mentions; mentions of different concepts never interact.
//   kHighestScore: direct links by cosine, above any model link; then the
//                  longer span.
//   kLongestSpan:  the longer span.
// Remaining ties go to the smaller start offset. Output is sorted by
// (start, end, concept_id). Input must come from one document.
std::vector<LinkedMention> resolve_overlaps(
    const std::vector<LinkedMention>& mentions, ResolutionPolicy policy);

}  // namespace conrec

#endif  // CONREC_POSTPROCESS_HPP_
