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
#ifndef CONREC_CORPUS_HPP_
#define CONREC_CORPUS_HPP_

#include <filesystem>
#include <istream>
#include <string_view>
#include <vector>

#include "conrec/extraction.hpp"

namespace conrec {

// Documents ordered by doc_id. Offsets index each text exactly as loaded.
struct Corpus {
  std::vector<Document> documents;

  const Document* find(std::string_view doc_id) const;
  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
};

// A directory of <doc_id>.txt files or a JSON-lines file of
// {"doc_id": ..., "text": ...}. Throws Error on duplicate ids, empty text or
// invalid UTF-8.
Corpus ingest_corpus(const std::filesystem::path& path);
Corpus load_jsonl(std::istream& in);

}  // namespace conrec

#endif  // CONREC_CORPUS_HPP_
