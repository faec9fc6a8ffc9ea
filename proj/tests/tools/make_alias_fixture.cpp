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

// Writes a synthetic OBO file with a given number of aliases.
//   make_alias_fixture OUT.obo [ALIASES=10000] [PER_CONCEPT=4] [SEED=1]

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

#include "conrec/ontology.hpp"
#include "test_support.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: make_alias_fixture OUT.obo [ALIASES] [PER_CONCEPT] [SEED]\n";
    return 2;
  }
  const std::size_t aliases = argc > 2 ? std::stoul(argv[2]) : 10000;
  const std::size_t per = argc > 3 ? std::stoul(argv[3]) : 4;
  const std::uint64_t seed = argc > 4 ? std::stoull(argv[4]) : 1;
  if (per == 0 || aliases % per != 0) {
    std::cerr << "ALIASES must be a multiple of PER_CONCEPT\n";
    return 2;
  }
  const conrec::Ontology o = conrec::testing::synthetic_ontology(aliases / per, per, seed);
  std::ofstream out(argv[1]);
  conrec::write_obo(o, out);
  if (!out) {
    std::cerr << "cannot write " << argv[1] << "\n";
    return 1;
  }
  std::cout << o.size() << " concepts, " << conrec::alias_list(o).size() << " aliases\n";
  return 0;
}
