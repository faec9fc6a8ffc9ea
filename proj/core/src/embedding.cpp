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

#include "conrec/embedding.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <unordered_set>

#include "conrec/error.hpp"
#include "conrec/hashing.hpp"
#include "conrec/text.hpp"
#include "http_util.hpp"

namespace conrec {
namespace {

void require_non_empty(const std::vector<std::string>& texts) {
  for (const std::string& t : texts) {
    if (t.empty()) throw Error("cannot embed an empty string");
  }
}

std::vector<std::string> whitespace_tokens(std::string_view lowered) {
  std::vector<std::string> tokens;
  const std::u32string cps = decode_utf8(lowered);
  std::u32string current;
  for (char32_t c : cps) {
    if (is_space(c)) {
      if (!current.empty()) tokens.push_back(encode_utf8(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(encode_utf8(current));
  return tokens;
}

double parse_double(std::string_view s, std::size_t line_no) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("bad vector component '" + std::string(s) + "'", line_no);
  }
  return v;
}

}  // namespace

double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

EmbeddingVector normalize(EmbeddingVector v) {
  const double norm = l2_norm(v.values);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw Error("cannot normalize a zero or non-finite vector");
  }
  for (double& x : v.values) x /= norm;
  v.unit_norm = true;
  return v;
}

EmbeddingVector Embedder::embed(const std::string& text) {
  return std::move(embed_batch({text}).front());
}

// ---------------------------------------------------------------------------
// Mock

EmbeddingVector mock_embed(std::string_view text, std::size_t dimension,
                           std::uint64_t seed) {
  EmbeddingVector v;
  v.values.assign(dimension, 0.0);
  for (const std::string& token : whitespace_tokens(to_lower(text))) {
    const std::uint64_t h = fnv1a64(token, seed);
    for (std::size_t d = 0; d < dimension; ++d) {
      v.values[d] += (splitmix64(h + d) >> 63) ? 1.0 : -1.0;
    }
  }
  return normalize(std::move(v));
}

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t seed)
    : dimension_(dimension), seed_(seed) {
  if (dimension == 0) throw Error("embedding dimension must be positive");
}

std::string MockEmbedder::identity() const {
  return "mock:dim=" + std::to_string(dimension_) +
         ":seed=" + std::to_string(seed_);
}

std::vector<EmbeddingVector> MockEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  require_non_empty(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(mock_embed(t, dimension_, seed_));
  return out;
}

// ---------------------------------------------------------------------------
// Precomputed file

FileEmbedder::FileEmbedder(
    std::size_t dimension,
    std::unordered_map<std::string, std::vector<double>> vectors,
    std::string source)
    : dimension_(dimension), vectors_(std::move(vectors)),
      source_(std::move(source)) {
  if (dimension_ == 0) throw Error("embedding dimension must be positive");
  for (const auto& [text, v] : vectors_) {
    if (v.size() != dimension_) {
      throw Error("vector for \"" + text + "\" has dimension " +
                  std::to_string(v.size()) + ", expected " +
                  std::to_string(dimension_));
    }
  }
}

FileEmbedder FileEmbedder::load(std::istream& in, std::string source) {
  std::size_t dimension = 0;
  std::unordered_map<std::string, std::vector<double>> vectors;
  Sha256 content;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    content.update_field(raw);
    if (dimension == 0) {
      if (trim(raw).empty()) continue;
      const std::string_view header = trim(raw);
      if (header.rfind("dim=", 0) != 0) {
        throw ParseError("vector file must start with dim=<D>", line_no);
      }
      const std::string_view num = header.substr(4);
      const auto [ptr, ec] =
          std::from_chars(num.data(), num.data() + num.size(), dimension);
      if (ec != std::errc() || ptr != num.data() + num.size() || dimension == 0) {
        throw ParseError("bad dimension in header", line_no);
      }
      continue;
    }
    if (raw.empty()) continue;
    const std::size_t tab = raw.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("vector rows need text<TAB>values", line_no);
    }
    std::string text = raw.substr(0, tab);
    std::vector<double> values;
    values.reserve(dimension);
    for (std::string_view part : split(std::string_view(raw).substr(tab + 1), ',')) {
      values.push_back(parse_double(part, line_no));
    }
    if (values.size() != dimension) {
      throw ParseError("expected " + std::to_string(dimension) +
                           " components, found " + std::to_string(values.size()),
                       line_no);
    }
    if (l2_norm(values) == 0.0) throw ParseError("zero vector", line_no);
    const auto [it, inserted] = vectors.emplace(std::move(text), values);
    if (!inserted && it->second != values) {
      throw ParseError("conflicting vectors for \"" + it->first + "\"", line_no);
    }
  }
  if (dimension == 0) throw ParseError("vector file has no dim=<D> header");
  const std::string digest = content.hex_digest().substr(0, 16);
  return FileEmbedder(dimension, std::move(vectors), source + "@" + digest);
}

FileEmbedder FileEmbedder::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vector file: " + path);
  return load(in, std::filesystem::path(path).filename().string());
}

std::string FileEmbedder::identity() const {
  return "file:" + source_ + ":dim=" + std::to_string(dimension_);
}

std::vector<EmbeddingVector> FileEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  require_non_empty(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) {
    const auto it = vectors_.find(t);
    if (it == vectors_.end()) throw LookupMissError(t);
    out.push_back(normalize(EmbeddingVector{it->second, false}));
  }
  return out;
}

void write_vector_file(
    std::ostream& out, std::size_t dimension,
    const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  out << "dim=" << dimension << '\n';
  char buf[64];
  for (const auto& [text, values] : rows) {
    if (values.size() != dimension) {
      throw Error("row \"" + text + "\" does not match dimension");
    }
    out << text << '\t';
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (i > 0) out << ',';
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), values[i]);
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// HTTP

struct HttpEmbedder::Gate {
  explicit Gate(std::size_t n) : slots(static_cast<std::ptrdiff_t>(n)) {}
  std::counting_semaphore<1024> slots;
};

HttpEmbedder::HttpEmbedder(HttpEmbedderOptions options)
    : options_(std::move(options)) {
  if (options_.dimension == 0) throw Error("embedding dimension must be positive");
  if (options_.batch_size == 0) throw Error("batch_size must be positive");
  options_.max_in_flight = std::clamp<std::size_t>(options_.max_in_flight, 1, 1024);
  detail::parse_url(options_.url);
  gate_ = std::make_unique<Gate>(options_.max_in_flight);
}

HttpEmbedder::~HttpEmbedder() = default;

std::string HttpEmbedder::identity() const {
  return "http:" + options_.url + ":dim=" + std::to_string(options_.dimension);
}

std::vector<EmbeddingVector> HttpEmbedder::request(
    const std::vector<std::string>& texts) {
  const nlohmann::json body = {{"inputs", texts}};
  gate_->slots.acquire();
  std::string response;
  try {
    response = detail::post_json(
        options_.url, body.dump(), {},
        {options_.attempts, options_.initial_backoff, options_.timeout},
        "embedding");
  } catch (...) {
    gate_->slots.release();
    throw;
  }
  gate_->slots.release();

  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(response);
  } catch (const nlohmann::json::exception& e) {
    throw BackendError(std::string("embedding response is not JSON: ") + e.what(), 200);
  }
  if (!parsed.contains("vectors") || !parsed["vectors"].is_array() ||
      parsed["vectors"].size() != texts.size()) {
    throw BackendError("embedding response must carry one vector per input", 200);
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& row : parsed["vectors"]) {
    EmbeddingVector v;
    try {
      v.values = row.get<std::vector<double>>();
    } catch (const nlohmann::json::exception&) {
      throw BackendError("embedding vector is not a list of numbers", 200);
    }
    if (v.values.size() != options_.dimension) {
      throw Error("embedding dimension mismatch: got " +
                  std::to_string(v.values.size()) + ", expected " +
                  std::to_string(options_.dimension));
    }
    out.push_back(normalize(std::move(v)));
  }
  return out;
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  require_non_empty(texts);
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); i += options_.batch_size) {
    const std::size_t end = std::min(texts.size(), i + options_.batch_size);
    std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                   texts.begin() + static_cast<std::ptrdiff_t>(end));
    for (auto& v : request(chunk)) out.push_back(std::move(v));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Cache

CachingEmbedder::CachingEmbedder(std::shared_ptr<Embedder> inner)
    : inner_(std::move(inner)) {
  if (!inner_) throw Error("CachingEmbedder needs a backend");
}

std::vector<EmbeddingVector> CachingEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  require_non_empty(texts);
  std::vector<std::string> missing;
  {
    std::lock_guard lock(mu_);
    std::unordered_set<std::string> queued;
    for (const std::string& t : texts) {
      if (cache_.contains(t)) {
        ++hits_;
      } else if (queued.insert(t).second) {
        missing.push_back(t);
      } else {
        ++hits_;  // repeated within this batch
      }
    }
    misses_ += missing.size();
  }
  std::vector<EmbeddingVector> fresh;
  if (!missing.empty()) fresh = inner_->embed_batch(missing);

  std::lock_guard lock(mu_);
  for (std::size_t i = 0; i < missing.size(); ++i) {
    cache_.emplace(missing[i], std::move(fresh[i]));
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const std::string& t : texts) out.push_back(cache_.at(t));
  return out;
}

std::size_t CachingEmbedder::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}

std::size_t CachingEmbedder::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

std::shared_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
  switch (spec.kind) {
    case EmbedderKind::kMock:
      return std::make_shared<MockEmbedder>(spec.dimension, spec.seed);
    case EmbedderKind::kFile: {
      auto backend = std::make_shared<FileEmbedder>(FileEmbedder::load_file(spec.path));
      if (backend->dimension() != spec.dimension) {
        throw Error("vector file dimension " + std::to_string(backend->dimension()) +
                    " does not match configured " + std::to_string(spec.dimension));
      }
      return backend;
    }
    case EmbedderKind::kHttp: {
      HttpEmbedderOptions opts;
      opts.url = spec.url;
      opts.dimension = spec.dimension;
      opts.batch_size = spec.batch_size;
      opts.max_in_flight = spec.max_in_flight;
      return std::make_shared<HttpEmbedder>(std::move(opts));
    }
  }
  throw Error("unknown embedder kind");
}

}  // namespace conrec
