// Copyright 2026 The ltk Authors.
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

// Shared fixtures and brute-force oracles for the unit and acceptance tests.

#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "ltk/cooc_index.hpp"
#include "ltk/entity_linker.hpp"
#include "ltk/error.hpp"
#include "ltk/qa_linker.hpp"
#include "ltk/rng.hpp"

namespace ltk::testing {

class TempDir {
 public:
  TempDir() {
    const auto base = std::filesystem::temp_directory_path();
    std::random_device rd;
    for (int attempt = 0; attempt < 100; ++attempt) {
      auto candidate = base / ("ltk-test-" + std::to_string(rd()));
      if (std::filesystem::create_directory(candidate)) {
        path_ = std::move(candidate);
        return;
      }
    }
    throw Error("could not create a temporary directory");
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& body) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << body;
  if (!out) throw Error("cannot write " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string entity_name(std::size_t i) { return "E" + std::to_string(i); }

// A corpus given directly as per-document entity sets.
struct SyntheticCorpus {
  std::uint64_t document_count = 0;
  std::vector<std::string> entities;
  std::vector<LinkedDocument> docs;  // ascending id; documents without entities omitted
  std::vector<std::set<std::string>> sets;  // one per document, dense
};

// Skewed entity frequencies so both long and tiny posting lists occur.
inline SyntheticCorpus random_corpus(Rng& rng, std::uint64_t max_docs, std::size_t max_entities) {
  SyntheticCorpus c;
  c.document_count = 1 + rng.below(max_docs);
  const std::size_t n_entities = 1 + rng.below(max_entities);
  for (std::size_t i = 0; i < n_entities; ++i) c.entities.push_back(entity_name(i));
  std::vector<double> rate(n_entities);
  for (auto& r : rate) r = std::pow(0.5, static_cast<double>(rng.below(10)));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  c.sets.resize(c.document_count);
  for (DocId d = 0; d < c.document_count; ++d) {
    for (std::size_t e = 0; e < n_entities; ++e) {
      if (u(rng.engine()) < rate[e]) c.sets[d].insert(c.entities[e]);
    }
    if (!c.sets[d].empty()) {
      c.docs.push_back({d, std::vector<EntityId>(c.sets[d].begin(), c.sets[d].end())});
    }
  }
  return c;
}

inline PostingList brute_docs_for_pair(const SyntheticCorpus& c, const std::string& a,
                                       const std::string& b) {
  PostingList out;
  for (DocId d = 0; d < c.sets.size(); ++d) {
    if (c.sets[d].count(a) && c.sets[d].count(b)) out.push_back(d);
  }
  return out;
}

// Random contiguous partition of [0, n) into k ranges, some possibly empty.
inline std::vector<DocRange> random_partition(Rng& rng, std::uint64_t n, std::size_t k) {
  std::vector<DocId> cuts{0, n};
  for (std::size_t i = 1; i < k; ++i) cuts.push_back(rng.below(n + 1));
  std::sort(cuts.begin(), cuts.end());
  std::vector<DocRange> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) out.push_back({cuts[i], cuts[i + 1]});
  return out;
}

inline std::vector<LinkedDocument> docs_in(const SyntheticCorpus& c, DocRange r) {
  std::vector<LinkedDocument> out;
  for (const auto& d : c.docs) {
    if (r.contains(d.internal_id)) out.push_back(d);
  }
  return out;
}

// Per-entity document bitsets, recounted from the raw sets.
class DenseMembership {
 public:
  explicit DenseMembership(const SyntheticCorpus& c) : words_((c.document_count + 63) / 64) {
    for (std::size_t i = 0; i < c.entities.size(); ++i) {
      slot_[c.entities[i]] = i;
      bits_.emplace_back(words_, 0);
    }
    for (DocId d = 0; d < c.sets.size(); ++d) {
      for (const auto& e : c.sets[d]) bits_[slot_.at(e)][d / 64] |= std::uint64_t{1} << (d % 64);
    }
  }

  PostingList docs(const std::string& a, const std::string& b) const {
    PostingList out;
    const auto ia = slot_.find(a);
    const auto ib = slot_.find(b);
    if (ia == slot_.end() || ib == slot_.end()) return out;
    for (std::size_t w = 0; w < words_; ++w) {
      std::uint64_t m = bits_[ia->second][w] & bits_[ib->second][w];
      for (unsigned bit = 0; m != 0; ++bit, m >>= 1) {
        if (m & 1) out.push_back(w * 64 + bit);
      }
    }
    return out;
  }

 private:
  std::size_t words_;
  std::map<std::string, std::size_t> slot_;
  std::vector<std::vector<std::uint64_t>> bits_;
};

// Compares every count the index answers against a brute-force recount.
// Returns the first mismatch description, or "" when everything agrees.
inline std::string check_against_oracle(const EntityIndex& idx, const SyntheticCorpus& c) {
  if (idx.document_count() != c.document_count) return "document_count";
  const DenseMembership oracle(c);
  std::vector<std::string> probe = c.entities;
  probe.push_back("absent");
  for (const auto& a : probe) {
    if (idx.count_entity(a) != oracle.docs(a, a).size()) return "count_entity(" + a + ")";
    for (const auto& b : probe) {
      const auto want = oracle.docs(a, b);
      if (idx.count_pair(a, b) != want.size()) return "count_pair(" + a + "," + b + ")";
      if (idx.docs_for_pair(a, b) != want) return "docs_for_pair(" + a + "," + b + ")";
    }
  }
  return "";
}

// Renders a corpus as jsonl whose text mentions "wN" for each entity EN, so
// linking it with fixture_gazetteer_tsv() reproduces the entity sets.
inline std::string corpus_jsonl(const SyntheticCorpus& c) {
  std::string out;
  for (DocId d = 0; d < c.sets.size(); ++d) {
    std::string body = "doc " + std::to_string(d) + ":";
    for (const auto& e : c.sets[d]) body += " w" + e.substr(1) + ",";
    out += "{\"id\":\"d" + std::to_string(d) + "\",\"text\":\"" + body + " end.\"}\n";
  }
  return out;
}

inline std::string fixture_gazetteer_tsv(std::size_t entities) {
  std::string out;
  for (std::size_t i = 0; i < entities; ++i) out += "w" + std::to_string(i) + "\t" + entity_name(i) + "\t1\n";
  return out;
}

// Independent Okapi BM25 over pre-tokenized passages.
inline double bm25_oracle(const std::vector<std::vector<std::string>>& passages,
                          const std::vector<std::string>& query, std::size_t target, double k1,
                          double b) {
  const double n = static_cast<double>(passages.size());
  double total = 0;
  for (const auto& p : passages) total += static_cast<double>(p.size());
  const double avgdl = total / n;
  const double dl = static_cast<double>(passages[target].size());
  double score = 0;
  for (const auto& q : query) {
    double df = 0;
    for (const auto& p : passages) df += std::find(p.begin(), p.end(), q) != p.end() ? 1 : 0;
    const double tf = static_cast<double>(std::count(passages[target].begin(), passages[target].end(), q));
    if (tf == 0) continue;
    const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
    score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dl / avgdl));
  }
  return score;
}

// Random QA fixture: single-word surfaces "wN" map to entity EN for N below
// `linked_words`; other words are unknown to the gazetteer.
struct QAFixture {
  SyntheticCorpus corpus;
  EntityIndex index;
  Gazetteer gazetteer;
  std::vector<QAExample> examples;
};

inline QAFixture random_qa_fixture(Rng& rng, std::size_t n_examples) {
  QAFixture f;
  f.corpus = random_corpus(rng, 200, 20);
  f.index = build_index(f.corpus.docs, f.corpus.document_count);
  const std::size_t linked_words = f.corpus.entities.size();
  for (std::size_t i = 0; i < linked_words; ++i) f.gazetteer.add("w" + std::to_string(i), entity_name(i), 1.0);
  f.gazetteer.finalize();
  const auto word = [&] { return "w" + std::to_string(rng.below(linked_words + 5)); };
  const auto phrase = [&](std::size_t max_words) {
    std::string s;
    const auto n = rng.below(max_words + 1);
    for (std::uint64_t i = 0; i < n; ++i) s += (i ? " " : "") + word();
    return s;
  };
  for (std::size_t i = 0; i < n_examples; ++i) {
    QAExample ex;
    ex.id = "q" + std::to_string(i);
    ex.question = "what " + phrase(4) + " ?";
    const auto n_answers = 1 + rng.below(4);
    for (std::uint64_t a = 0; a < n_answers; ++a) ex.answers.push_back(phrase(2));
    f.examples.push_back(std::move(ex));
  }
  return f;
}

inline std::set<std::string> fixture_entities(const std::string& text, std::size_t linked_words) {
  std::set<std::string> out;
  std::istringstream in(text);
  std::string w;
  while (in >> w) {
    if (w.size() > 1 && w[0] == 'w' && std::isdigit(static_cast<unsigned char>(w[1]))) {
      const auto n = std::stoul(w.substr(1));
      if (n < linked_words) out.insert(entity_name(n));
    }
  }
  return out;
}

// Exhaustive comparison: the expected LinkedQA status and entities.
inline LinkedQA oracle_link_qa(const QAFixture& f, const QAExample& ex) {
  const std::size_t linked_words = f.corpus.entities.size();
  LinkedQA want;
  want.id = ex.id;
  std::map<std::string, std::uint64_t> tally;
  for (const auto& a : ex.answers) {
    for (const auto& e : fixture_entities(a, linked_words)) ++tally[e];
  }
  std::uint64_t best = 0;
  for (const auto& [e, n] : tally) {
    if (n > best || (n == best && e < want.answer_entity)) {
      best = n;
      want.answer_entity = e;
    }
  }
  if (want.answer_entity.empty()) {
    want.status = LinkStatus::kNoAnswerEntity;
    return want;
  }
  const auto qs = fixture_entities(ex.question, linked_words);
  if (qs.empty()) {
    want.status = LinkStatus::kNoQuestionEntity;
    return want;
  }
  std::uint64_t top = 0;
  for (const auto& q : qs) top = std::max<std::uint64_t>(top, brute_docs_for_pair(f.corpus, q, want.answer_entity).size());
  for (const auto& q : qs) {
    if (brute_docs_for_pair(f.corpus, q, want.answer_entity).size() == top) {
      want.question_entity = q;
      break;
    }
  }
  want.relevant_doc_count = top;
  want.status = top == 0 ? LinkStatus::kZeroRelevantDocs : LinkStatus::kLinked;
  return want;
}

inline bool same_link(const LinkedQA& got, const LinkedQA& want) {
  if (got.status != want.status) return false;
  if (got.status == LinkStatus::kNoAnswerEntity) return true;
  if (got.answer_entity != want.answer_entity) return false;
  if (got.status == LinkStatus::kNoQuestionEntity) return true;
  return got.question_entity == want.question_entity &&
         got.relevant_doc_count == want.relevant_doc_count;
}

}  // namespace ltk::testing
