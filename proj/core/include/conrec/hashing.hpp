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

#ifndef CONREC_HASHING_HPP_
#define CONREC_HASHING_HPP_

#include <cstdint>
#include <string>
#include <string_view>

namespace conrec {

// Incremental SHA-256; digest is returned as lowercase hex.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  Sha256& update(std::string_view bytes);
  // Length-prefixed so that ("ab","c") and ("a","bc") hash differently.
  Sha256& update_field(std::string_view bytes);
  std::string hex_digest();

 private:
  void* ctx_;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

// 64-bit FNV-1a. Stable across platforms; used where a cheap
// non-cryptographic hash must be reproducible.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t seed = 0);
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace conrec

#endif  // CONREC_HASHING_HPP_
