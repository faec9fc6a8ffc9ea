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
#ifndef CONREC_EMBEDDING_HPP_
#define CONREC_EMBEDDING_HPP_

#include <chrono>
#include <cstdint>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace conrec {

struct EmbeddingVector {
  std::vector<double> values;
  bool unit_norm = false;

  std::size_t dimension() const { return values.size(); }
  bool operator==(const EmbeddingVector&) const = default;
};

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

// v / |v|. Throws Error for the zero vector.
EmbeddingVector normalize(EmbeddingVector v);

// Text-to-vector backend. Implementations return one unit-norm vector per
// input, in input order, and must tolerate concurrent calls.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  // Stable description of the backend and its parameters; part of index
  // fingerprints and run manifests.
  virtual std::string identity() const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) = 0;

  EmbeddingVector embed(const std::string& text);
};

// Deterministic offline backend. Each whitespace token of the lowercased text
// is hashed with the seed into a D-dimensional +1/-1 vector; the token
// vectors are summed and normalized. Equal token multisets give equal
// vectors, shared tokens raise cosine similarity.
EmbeddingVector mock_embed(std::string_view text, std::size_t dimension,
                           std::uint64_t seed);

class MockEmbedder : public Embedder {
 public:
  MockEmbedder(std::size_t dimension, std::uint64_t seed);
  std::size_t dimension() const override { return dimension_; }
  std::string identity() const override;
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
};

// Precomputed vectors. File format: a "dim=<D>" header line followed by
// "text<TAB>v1,v2,...,vD" lines. Lookups are by exact text.
class FileEmbedder : public Embedder {
 public:
  FileEmbedder(std::size_t dimension,
               std::unordered_map<std::string, std::vector<double>> vectors,
               std::string source = "memory");
  static FileEmbedder load(std::istream& in, std::string source = "stream");
  static FileEmbedder load_file(const std::string& path);

  std::size_t dimension() const override { return dimension_; }
  std::string identity() const override;
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;
  std::size_t size() const { return vectors_.size(); }

 private:
  std::size_t dimension_;
  std::unordered_map<std::string, std::vector<double>> vectors_;
  std::string source_;
};

void write_vector_file(
    std::ostream& out, std::size_t dimension,
    const std::vector<std::pair<std::string, std::vector<double>>>& rows);

struct HttpEmbedderOptions {
  std::string url;  // e.g. http://127.0.0.1:8000/embed
  std::size_t dimension = 768;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{250};
  std::chrono::seconds timeout{60};
};

// POST {"inputs": [...]} -> {"vectors": [[...], ...]}. Requests are retried
// with exponential backoff; they are idempotent.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderOptions options);
  ~HttpEmbedder() override;

  std::size_t dimension() const override { return options_.dimension; }
  std::string identity() const override;
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;

 private:
  std::vector<EmbeddingVector> request(const std::vector<std::string>& texts);

  HttpEmbedderOptions options_;
  struct Gate;
  std::unique_ptr<Gate> gate_;
};

// Memoizes another backend by exact text. Safe for concurrent use.
class CachingEmbedder : public Embedder {
 public:
  explicit CachingEmbedder(std::shared_ptr<Embedder> inner);

  std::size_t dimension() const override { return inner_->dimension(); }
  std::string identity() const override { return inner_->identity(); }
  std::vector<EmbeddingVector> embed_batch(
      const std::vector<std::string>& texts) override;

  std::size_t hits() const;
  std::size_t misses() const;

 private:
  std::shared_ptr<Embedder> inner_;
  mutable std::mutex mu_;
  std::unordered_map<std::string, EmbeddingVector> cache_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

enum class EmbedderKind { kHttp, kFile, kMock };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kHttp;
  std::size_t dimension = 768;
  std::string url;
  std::string path;
  std::size_t batch_size = 32;
  std::size_t max_in_flight = 4;
  std::uint64_t seed = 7;
};

std::shared_ptr<Embedder> make_embedder(const EmbedderSpec& spec);

}  // namespace conrec

#endif  // CONREC_EMBEDDING_HPP_
