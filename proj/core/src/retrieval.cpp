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

#include "conrec/retrieval.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "conrec/error.hpp"
#include "conrec/hashing.hpp"

namespace conrec {
namespace {

constexpr std::array<char, 8> kMagic = {'C', 'O', 'N', 'R', 'E', 'C', 'I', 'X'};

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    buf.push_back(static_cast<char>(v & 0xFF));
    v >>= 8;
  }
}

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) {
    buf.push_back(static_cast<char>(v & 0xFF));
    v >>= 8;
  }
}

void put_str(std::string& buf, std::string_view s) {
  put_u32(buf, static_cast<std::uint32_t>(s.size()));
  buf.append(s);
}

// Little-endian bytes of a vector row, independent of host order.
std::string row_bytes(std::span<const double> row) {
  std::string buf;
  buf.reserve(row.size() * 8);
  for (double x : row) put_u64(buf, std::bit_cast<std::uint64_t>(x));
  return buf;
}

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void bytes(char* out, std::size_t n) {
    in_.read(out, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw IndexFormatError("index file is truncated");
    }
  }
  std::uint64_t u64() {
    unsigned char b[8];
    bytes(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint32_t u32() {
    unsigned char b[4];
    bytes(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }
  std::uint8_t u8() {
    char c;
    bytes(&c, 1);
    return static_cast<std::uint8_t>(c);
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 24)) throw IndexFormatError("index string field too long");
    std::string s(n, '\0');
    bytes(s.data(), n);
    return s;
  }

 private:
  std::istream& in_;
};

ConceptIndex::Header read_header(Reader& r) {
  std::array<char, 8> magic{};
  r.bytes(magic.data(), magic.size());
  if (magic != kMagic) throw IndexFormatError("not a conrec index file");
  ConceptIndex::Header h;
  h.version = r.u32();
  if (h.version != ConceptIndex::kFormatVersion) {
    throw IndexFormatError("unsupported index version " +
                           std::to_string(h.version));
  }
  h.dimension = r.u32();
  h.entry_count = r.u64();
  h.ontology_label = r.str();
  h.content_hash = r.str();
  h.source_fingerprint = r.str();
  return h;
}

}  // namespace

ConceptIndex::ConceptIndex(std::vector<IndexEntry> entries,
                           std::vector<double> vectors, std::size_t dimension,
                           std::string ontology_label,
                           std::string source_fingerprint)
    : entries_(std::move(entries)),
      vectors_(std::move(vectors)),
      dimension_(dimension),
      ontology_label_(std::move(ontology_label)),
      source_fingerprint_(std::move(source_fingerprint)) {
  if (dimension_ == 0) throw Error("index dimension must be positive");
  if (vectors_.size() != entries_.size() * dimension_) {
    throw Error("index vector buffer does not match entries x dimension");
  }
  finalize();
}

void ConceptIndex::finalize() {
  Sha256 h;
  h.update_field(std::to_string(dimension_));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    h.update_field(entries_[i].alias);
    h.update_field(entries_[i].concept_id);
    h.update_field(to_string(entries_[i].kind));
    h.update_field(row_bytes(vector(i)));
  }
  content_hash_ = h.hex_digest();

  concept_ids_.clear();
  for (const IndexEntry& e : entries_) concept_ids_.push_back(e.concept_id);
  std::sort(concept_ids_.begin(), concept_ids_.end());
  concept_ids_.erase(std::unique(concept_ids_.begin(), concept_ids_.end()),
                     concept_ids_.end());
  std::unordered_map<std::string_view, std::size_t> ordinal;
  for (std::size_t i = 0; i < concept_ids_.size(); ++i) {
    ordinal.emplace(concept_ids_[i], i);
  }
  entry_concept_.resize(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    entry_concept_[i] = ordinal.at(entries_[i].concept_id);
  }
}

void ConceptIndex::save(std::ostream& out) const {
  std::string buf(kMagic.begin(), kMagic.end());
  put_u32(buf, kFormatVersion);
  put_u32(buf, static_cast<std::uint32_t>(dimension_));
  put_u64(buf, entries_.size());
  put_str(buf, ontology_label_);
  put_str(buf, content_hash_);
  put_str(buf, source_fingerprint_);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    buf.clear();
    put_str(buf, entries_[i].alias);
    put_str(buf, entries_[i].concept_id);
    buf.push_back(static_cast<char>(entries_[i].kind));
    buf += row_bytes(vector(i));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw Error("failed writing index");
}

void ConceptIndex::save_file(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write index file: " + tmp);
    save(out);
  }
  std::filesystem::rename(tmp, path);
}

ConceptIndex ConceptIndex::load(std::istream& in) {
  Reader r(in);
  const Header h = read_header(r);
  if (h.dimension == 0) throw IndexFormatError("index dimension is zero");
  std::vector<IndexEntry> entries;
  std::vector<double> vectors;
  entries.reserve(h.entry_count);
  vectors.reserve(h.entry_count * h.dimension);
  for (std::size_t i = 0; i < h.entry_count; ++i) {
    IndexEntry e;
    e.alias = r.str();
    e.concept_id = r.str();
    const std::uint8_t kind = r.u8();
    if (kind > static_cast<std::uint8_t>(AliasKind::kXref)) {
      throw IndexFormatError("bad alias kind in index entry " + std::to_string(i));
    }
    e.kind = static_cast<AliasKind>(kind);
    for (std::size_t d = 0; d < h.dimension; ++d) {
      vectors.push_back(std::bit_cast<double>(r.u64()));
    }
    entries.push_back(std::move(e));
  }
  ConceptIndex index(std::move(entries), std::move(vectors), h.dimension,
                     h.ontology_label, h.source_fingerprint);
  if (index.content_hash() != h.content_hash) {
    throw IndexFormatError("index content hash mismatch (file corrupt or edited)");
  }
  return index;
}

ConceptIndex ConceptIndex::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index file: " + path);
  return load(in);
}

ConceptIndex::Header ConceptIndex::read_header_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index file: " + path);
  Reader r(in);
  return read_header(r);
}

void ConceptIndex::export_vectors(std::ostream& out) const {
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  rows.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto v = vector(i);
    rows.emplace_back(entries_[i].alias, std::vector<double>(v.begin(), v.end()));
  }
  write_vector_file(out, dimension_, rows);
}

bool ConceptIndex::operator==(const ConceptIndex& other) const {
  return dimension_ == other.dimension_ && entries_ == other.entries_ &&
         vectors_ == other.vectors_ &&
         ontology_label_ == other.ontology_label_ &&
         source_fingerprint_ == other.source_fingerprint_;
}

std::string index_source_fingerprint(const std::vector<Alias>& aliases,
                                     const Embedder& embedder) {
  Sha256 h;
  h.update_field(embedder.identity());
  h.update_field(std::to_string(embedder.dimension()));
  for (const Alias& a : aliases) {
    h.update_field(a.text);
    h.update_field(a.concept_id);
    h.update_field(to_string(a.kind));
  }
  return h.hex_digest();
}

ConceptIndex build_index(const Ontology& ontology, Embedder& embedder,
                         std::size_t batch_size) {
  const std::vector<Alias> aliases = alias_list(ontology);
  if (aliases.empty()) throw Error("ontology has no live concepts to index");
  if (batch_size == 0) batch_size = 1;
  const std::size_t dim = embedder.dimension();

  std::vector<IndexEntry> entries;
  std::vector<double> vectors;
  entries.reserve(aliases.size());
  vectors.reserve(aliases.size() * dim);
  for (std::size_t i = 0; i < aliases.size(); i += batch_size) {
    const std::size_t end = std::min(aliases.size(), i + batch_size);
    std::vector<std::string> texts;
    texts.reserve(end - i);
    for (std::size_t j = i; j < end; ++j) texts.push_back(aliases[j].text);

    const std::string where = "alias batch [" + std::to_string(i) + ", " +
                              std::to_string(end) + ") starting at \"" +
                              texts.front() + "\"";
    std::vector<EmbeddingVector> embedded;
    try {
      embedded = embedder.embed_batch(texts);
    } catch (const BackendError& e) {
      throw BackendError(std::string(e.what()) + " while embedding " + where,
                         e.status());
    } catch (const Error& e) {
      throw Error(std::string(e.what()) + " while embedding " + where);
    }
    if (embedded.size() != texts.size()) {
      throw Error("backend returned wrong vector count for " + where);
    }
    for (std::size_t j = 0; j < embedded.size(); ++j) {
      if (embedded[j].dimension() != dim) {
        throw Error("dimension mismatch for alias \"" + texts[j] + "\"");
      }
      vectors.insert(vectors.end(), embedded[j].values.begin(),
                     embedded[j].values.end());
      const Alias& a = aliases[i + j];
      entries.push_back({a.text, a.concept_id, a.kind});
    }
  }
  return ConceptIndex(std::move(entries), std::move(vectors), dim,
                      ontology.source_label(),
                      index_source_fingerprint(aliases, embedder));
}

std::vector<Candidate> top_k_concepts(const ConceptIndex& index,
                                      std::span<const double> query,
                                      std::size_t k) {
  if (query.size() != index.dimension()) {
    throw Error("query dimension " + std::to_string(query.size()) +
                " does not match index dimension " +
                std::to_string(index.dimension()));
  }
  const std::size_t n_concepts = index.concept_ids().size();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<double> best(n_concepts, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> best_entry(n_concepts, kNone);
  for (std::size_t e = 0; e < index.size(); ++e) {
    const double s = dot(index.vector(e), query);
    const std::size_t c = index.entry_concept(e);
    if (best_entry[c] == kNone || s > best[c]) {
      best[c] = s;
      best_entry[c] = e;
    }
  }

  std::vector<std::size_t> order(n_concepts);
  std::iota(order.begin(), order.end(), 0);
  const std::size_t take = std::min(k, n_concepts);
  // concept_ids() is sorted, so a smaller ordinal is a smaller ID.
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take),
                    order.end(), [&](std::size_t a, std::size_t b) {
                      if (best[a] != best[b]) return best[a] > best[b];
                      return a < b;
                    });
  std::vector<Candidate> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t c = order[i];
    out.push_back({index.concept_ids()[c], index.entries()[best_entry[c]].alias,
                   best[c]});
  }
  return out;
}

void Thresholds::validate() const {
  if (!(tau2 >= 0.0 && tau2 < tau1 && tau1 <= 1.0)) {
    throw Error("thresholds must satisfy 0 <= tau2 < tau1 <= 1");
  }
  if (k < 1) throw Error("k must be at least 1");
}

std::string_view to_string(DecisionKind kind) {
  switch (kind) {
    case DecisionKind::kDirect: return "direct";
    case DecisionKind::kAmbiguous: return "ambiguous";
    case DecisionKind::kNoMatch: return "no_match";
  }
  return "no_match";
}

RetrievalDecision decide(const ConceptIndex& index,
                         std::span<const double> query,
                         const Thresholds& thresholds) {
  std::vector<Candidate> top = top_k_concepts(index, query, thresholds.k);
  RetrievalDecision d;
  if (top.empty()) {
    d.best_score = -std::numeric_limits<double>::infinity();
    return d;
  }
  d.best_score = top.front().score;
  if (d.best_score >= thresholds.tau1) {
    d.kind = DecisionKind::kDirect;
    top.resize(1);
    d.candidates = std::move(top);
  } else if (d.best_score >= thresholds.tau2) {
    d.kind = DecisionKind::kAmbiguous;
    std::erase_if(top, [&](const Candidate& c) { return c.score < thresholds.tau2; });
    d.candidates = std::move(top);
  }
  return d;
}

RetrievalDecision query(const ConceptIndex& index, const EntitySpan& entity,
                        Embedder& embedder, const Thresholds& thresholds) {
  const EmbeddingVector v = embedder.embed(entity.text);
  return decide(index, v.values, thresholds);
}

std::vector<RetrievalDecision> query_batch(
    const ConceptIndex& index, const std::vector<EntitySpan>& entities,
    Embedder& embedder, const Thresholds& thresholds) {
  if (entities.empty()) return {};
  std::vector<std::string> texts;
  texts.reserve(entities.size());
  for (const EntitySpan& e : entities) texts.push_back(e.text);
  const std::vector<EmbeddingVector> vectors = embedder.embed_batch(texts);
  std::vector<RetrievalDecision> out;
  out.reserve(entities.size());
  for (const EmbeddingVector& v : vectors) {
    out.push_back(decide(index, v.values, thresholds));
  }
  return out;
}

}  // namespace conrec
