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
#include "conrec/ontology.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "conrec/error.hpp"
#include "conrec/hashing.hpp"
#include "conrec/text.hpp"

namespace conrec {
namespace {

// Removes an unquoted, unescaped trailing "! comment".
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '\\') {
      ++i;
    } else if (c == '"') {
      quoted = !quoted;
    } else if (c == '!' && !quoted) {
      return trim(line.substr(0, i));
    }
  }
  return trim(line);
}

// Removes a trailing "{...}" modifier block.
std::string_view strip_modifiers(std::string_view value) {
  value = trim(value);
  if (!value.empty() && value.back() == '}') {
    const std::size_t open = value.rfind('{');
    if (open != std::string_view::npos) value = trim(value.substr(0, open));
  }
  return value;
}

std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      const char n = s[++i];
      out.push_back(n == 'n' ? '\n' : n == 't' ? '\t' : n);
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::string escape(std::string_view s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '!': out += "\\!"; break;
      case '{': out += "\\{"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

// Parses a leading quoted string; rest receives what follows it.
bool take_quoted(std::string_view value, std::string& text,
                 std::string_view& rest) {
  value = trim(value);
  if (value.empty() || value.front() != '"') return false;
  for (std::size_t i = 1; i < value.size(); ++i) {
    if (value[i] == '\\') {
      ++i;
    } else if (value[i] == '"') {
      text = unescape(value.substr(1, i - 1));
      rest = trim(value.substr(i + 1));
      return true;
    }
  }
  return false;
}

std::string first_word(std::string_view s) {
  s = trim(s);
  const std::size_t end = s.find_first_of(" \t");
  return std::string(s.substr(0, end));
}

struct PendingTerm {
  Concept concept_;
  std::size_t line = 0;
  bool has_id = false;
  bool has_name = false;
  std::unordered_set<std::string> synonym_keys;
};

}  // namespace

std::string_view to_string(AliasKind kind) {
  switch (kind) {
    case AliasKind::kName: return "name";
    case AliasKind::kSynonym: return "synonym";
    case AliasKind::kXref: return "xref";
  }
  return "name";
}

AliasKind alias_kind_from_string(std::string_view s) {
  if (s == "name") return AliasKind::kName;
  if (s == "synonym") return AliasKind::kSynonym;
  if (s == "xref") return AliasKind::kXref;
  throw Error("unknown alias kind: " + std::string(s));
}

Ontology::Ontology(ConceptMap concepts, std::optional<std::string> root_id,
                   std::string source_label)
    : concepts_(std::move(concepts)),
      root_id_(std::move(root_id)),
      source_label_(std::move(source_label)) {}

const Concept* Ontology::find(std::string_view id) const {
  const auto it = concepts_.find(id);
  return it == concepts_.end() ? nullptr : &it->second;
}

const Concept& Ontology::at(std::string_view id) const {
  const Concept* c = find(id);
  if (c == nullptr) throw Error("unknown concept id: " + std::string(id));
  return *c;
}

std::size_t Ontology::non_obsolete_count() const {
  return static_cast<std::size_t>(
      std::count_if(concepts_.begin(), concepts_.end(),
                    [](const auto& kv) { return !kv.second.obsolete; }));
}

Ontology parse_obo(std::istream& in) {
  Ontology::ConceptMap concepts;
  std::string ontology_tag;
  std::string data_version;
  std::optional<PendingTerm> term;
  bool in_header = true;
  bool in_term = false;

  const auto finish = [&]() {
    if (!term) return;
    PendingTerm& t = *term;
    if (!t.has_id) throw ParseError("[Term] stanza without id", t.line);
    if (!t.concept_.obsolete && t.concept_.name.empty()) {
      throw ParseError("term " + t.concept_.id + " has no name", t.line);
    }
    const std::string id = t.concept_.id;
    if (!concepts.emplace(id, std::move(t.concept_)).second) {
      throw ParseError("duplicate term id: " + id, t.line);
    }
    term.reset();
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string_view line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '!') continue;
    if (line.front() == '[') {
      finish();
      in_header = false;
      in_term = line == "[Term]";
      if (in_term) {
        term.emplace();
        term->line = line_no;
      }
      continue;
    }
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      if (in_term) throw ParseError("expected tag: value", line_no);
      continue;
    }
    const std::string_view tag = trim(line.substr(0, colon));
    const std::string_view value = line.substr(colon + 1);

    if (in_header) {
      if (tag == "ontology") ontology_tag = std::string(strip_comment(value));
      if (tag == "data-version") data_version = std::string(strip_comment(value));
      continue;
    }
    if (!in_term) continue;

    Concept& c = term->concept_;
    if (tag == "id") {
      if (term->has_id) throw ParseError("term has two id tags", line_no);
      c.id = std::string(strip_comment(value));
      if (c.id.empty()) throw ParseError("empty id", line_no);
      term->has_id = true;
    } else if (tag == "name") {
      if (!term->has_name) {
        c.name = unescape(strip_comment(value));
        term->has_name = !c.name.empty();
      }
    } else if (tag == "def") {
      std::string text;
      std::string_view rest;
      if (!take_quoted(value, text, rest)) {
        throw ParseError("def: expects a quoted string", line_no);
      }
      c.definition = std::move(text);
    } else if (tag == "synonym") {
      std::string text;
      std::string_view rest;
      if (!take_quoted(value, text, rest)) {
        throw ParseError("synonym: expects a quoted string", line_no);
      }
      std::string scope = first_word(strip_comment(rest));
      if (!scope.empty() && scope.front() == '[') scope.clear();
      if (term->synonym_keys.insert(normalize_alias(text)).second) {
        c.synonyms.push_back({std::move(text), std::move(scope)});
      }
    } else if (tag == "xref") {
      std::string code = first_word(strip_modifiers(strip_comment(value)));
      if (!code.empty() &&
          std::find(c.xrefs.begin(), c.xrefs.end(), code) == c.xrefs.end()) {
        c.xrefs.push_back(std::move(code));
      }
    } else if (tag == "is_a") {
      std::string parent = first_word(strip_modifiers(strip_comment(value)));
      if (!parent.empty() && std::find(c.parents.begin(), c.parents.end(),
                                       parent) == c.parents.end()) {
        c.parents.push_back(std::move(parent));
      }
    } else if (tag == "is_obsolete") {
      c.obsolete = strip_comment(value) == "true";
    }
  }
  finish();

  std::size_t dangling = 0;
  for (auto& [id, c] : concepts) {
    const auto before = c.parents.size();
    std::erase_if(c.parents, [&](const std::string& p) {
      return concepts.find(p) == concepts.end();
    });
    dangling += before - c.parents.size();
  }
  if (dangling > 0) {
    spdlog::debug("dropped {} is_a edges to concepts not in the file", dangling);
  }

  std::string label = ontology_tag;
  if (!data_version.empty()) {
    label = label.empty() ? data_version : label + " " + data_version;
  }
  return Ontology(std::move(concepts), std::nullopt, std::move(label));
}

Ontology parse_obo_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open ontology file: " + path);
  return parse_obo(in);
}

void write_obo(const Ontology& ontology, std::ostream& out) {
  out << "format-version: 1.2\n";
  if (!ontology.source_label().empty()) {
    out << "data-version: " << ontology.source_label() << "\n";
  }
  for (const auto& [id, c] : ontology.concepts()) {
    out << "\n[Term]\n";
    out << "id: " << c.id << "\n";
    if (!c.name.empty()) out << "name: " << escape(c.name) << "\n";
    if (c.definition) out << "def: \"" << escape(*c.definition) << "\" []\n";
    for (const Synonym& s : c.synonyms) {
      out << "synonym: \"" << escape(s.text) << "\"";
      if (!s.scope.empty()) out << " " << s.scope;
      out << " []\n";
    }
    for (const std::string& x : c.xrefs) out << "xref: " << x << "\n";
    for (const std::string& p : c.parents) out << "is_a: " << p << "\n";
    if (c.obsolete) out << "is_obsolete: true\n";
  }
}

Ontology attach_xref_synonyms(const Ontology& ontology, std::istream& sidecar,
                              std::size_t* skipped) {
  Ontology::ConceptMap concepts = ontology.concepts();
  std::size_t unknown = 0;
  std::string raw;
  std::size_t line_no = 0;
  std::unordered_map<std::string, std::unordered_set<std::string>> seen;
  for (auto& [id, c] : concepts) {
    for (const auto& s : c.xref_synonyms) seen[id].insert(normalize_alias(s));
  }
  while (std::getline(sidecar, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty() || raw.front() == '#') continue;
    const auto cols = split(raw, '\t');
    if (cols.size() != 2 || trim(cols[0]).empty() || trim(cols[1]).empty()) {
      throw ParseError("xref sidecar rows need concept_id<TAB>synonym",
                       line_no);
    }
    const std::string id(trim(cols[0]));
    const std::string synonym(trim(cols[1]));
    auto it = concepts.find(id);
    if (it == concepts.end()) {
      ++unknown;
      continue;
    }
    if (seen[id].insert(normalize_alias(synonym)).second) {
      it->second.xref_synonyms.push_back(synonym);
    }
  }
  if (skipped != nullptr) *skipped = unknown;
  return Ontology(std::move(concepts), ontology.root_id(),
                  ontology.source_label());
}

void write_xref_sidecar(const Ontology& ontology, std::ostream& out) {
  for (const auto& [id, c] : ontology.concepts()) {
    for (const auto& s : c.xref_synonyms) out << id << '\t' << s << '\n';
  }
}

Ontology subtree_filter(const Ontology& ontology, std::string_view root_id) {
  const Concept* root = ontology.find(root_id);
  if (root == nullptr) {
    throw Error("subtree root not in ontology: " + std::string(root_id));
  }
  if (root->obsolete) {
    throw Error("subtree root is obsolete: " + std::string(root_id));
  }

  std::unordered_map<std::string_view, std::vector<std::string_view>> children;
  for (const auto& [id, c] : ontology.concepts()) {
    if (c.obsolete) continue;
    for (const std::string& p : c.parents) children[p].push_back(id);
  }

  std::set<std::string_view> keep{root->id};
  std::deque<std::string_view> frontier{root->id};
  while (!frontier.empty()) {
    const std::string_view id = frontier.front();
    frontier.pop_front();
    const auto it = children.find(id);
    if (it == children.end()) continue;
    for (std::string_view child : it->second) {
      if (keep.insert(child).second) frontier.push_back(child);
    }
  }

  Ontology::ConceptMap out;
  for (std::string_view id : keep) {
    Concept c = ontology.at(id);
    std::erase_if(c.parents,
                  [&](const std::string& p) { return !keep.contains(p); });
    out.emplace(c.id, std::move(c));
  }
  return Ontology(std::move(out), std::string(root_id),
                  ontology.source_label());
}

std::vector<Alias> alias_list(const Ontology& ontology) {
  std::vector<Alias> aliases;
  for (const auto& [id, c] : ontology.concepts()) {
    if (c.obsolete) continue;
    const auto add = [&](std::string_view text, AliasKind kind) {
      std::string norm = normalize_alias(text);
      if (!norm.empty()) aliases.push_back({std::move(norm), id, kind});
    };
    add(c.name, AliasKind::kName);
    for (const Synonym& s : c.synonyms) add(s.text, AliasKind::kSynonym);
    for (const std::string& s : c.xref_synonyms) add(s, AliasKind::kXref);
  }
  std::stable_sort(aliases.begin(), aliases.end(),
                   [](const Alias& a, const Alias& b) {
                     return std::tie(a.concept_id, a.kind, a.text) <
                            std::tie(b.concept_id, b.kind, b.text);
                   });
  return aliases;
}

std::string ontology_fingerprint(const Ontology& ontology) {
  std::ostringstream obo;
  write_obo(ontology, obo);
  std::ostringstream sidecar;
  write_xref_sidecar(ontology, sidecar);
  Sha256 h;
  h.update_field(obo.str());
  h.update_field(sidecar.str());
  h.update_field(ontology.root_id().value_or(""));
  h.update_field(ontology.source_label());
  return h.hex_digest();
}

}  // namespace conrec
