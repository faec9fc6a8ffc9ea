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

#include "conrec/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <set>

#include "conrec/error.hpp"
#include "conrec/text.hpp"

namespace conrec {
namespace {

void sort_and_check(std::vector<Document>& docs) {
  std::sort(docs.begin(), docs.end(), [](const Document& a, const Document& b) {
    return a.doc_id < b.doc_id;
  });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].doc_id == docs[i - 1].doc_id) {
      throw Error("duplicate doc_id in corpus: " + docs[i].doc_id);
    }
  }
}

Text make_text(std::string bytes, const std::string& doc_id) {
  if (bytes.empty()) throw Error("document " + doc_id + " is empty");
  try {
    return Text(std::move(bytes));
  } catch (const ParseError& e) {
    throw Error("document " + doc_id + ": " + e.what());
  }
}

}  // namespace

const Document* Corpus::find(std::string_view doc_id) const {
  const auto it = std::lower_bound(
      documents.begin(), documents.end(), doc_id,
      [](const Document& d, std::string_view id) { return d.doc_id < id; });
  if (it == documents.end() || it->doc_id != doc_id) return nullptr;
  return &*it;
}

Corpus load_jsonl(std::istream& in) {
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("corpus line is not JSON: ") + e.what(), line_no);
    }
    if (!j.is_object() || !j.contains("doc_id") || !j.contains("text") ||
        !j["doc_id"].is_string() || !j["text"].is_string()) {
      throw ParseError("corpus rows need string fields doc_id and text", line_no);
    }
    std::string id = j["doc_id"].get<std::string>();
    if (id.empty()) throw ParseError("empty doc_id", line_no);
    Text text = make_text(j["text"].get<std::string>(), id);
    corpus.documents.push_back({std::move(id), std::move(text)});
  }
  sort_and_check(corpus.documents);
  return corpus;
}

Corpus ingest_corpus(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) {
    Corpus corpus;
    for (const auto& entry : fs::directory_iterator(path)) {
      if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
      std::ifstream in(entry.path(), std::ios::binary);
      if (!in) throw Error("cannot read " + entry.path().string());
      std::string bytes((std::istreambuf_iterator<char>(in)),
                        std::istreambuf_iterator<char>());
      const std::string id = entry.path().stem().string();
      corpus.documents.push_back({id, make_text(std::move(bytes), id)});
    }
    sort_and_check(corpus.documents);
    return corpus;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("corpus path not found: " + path.string());
  return load_jsonl(in);
}

}  // namespace conrec
