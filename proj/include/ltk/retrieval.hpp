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

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ltk/corpus_io.hpp"
#include "ltk/eval_metrics.hpp"

namespace ltk {

using PassageId = std::uint64_t;

struct Passage {
  PassageId id = 0;
  DocId doc_id = 0;
  std::string text;
  std::uint64_t token_count = 0;  // whitespace tokens

  friend bool operator==(const Passage&, const Passage&) = default;
};

inline constexpr std::size_t kMaxPassageTokens = 300;

// Splits on blank lines; paragraphs over kMaxPassageTokens whitespace tokens
// are packed sentence by sentence into pieces of at most that many tokens
// (a single overlong sentence is cut hard). Ids count up from `first_id`.
std::vector<Passage> segment_passages(std::string_view text, DocId doc_id, PassageId first_id = 0);

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;
};

struct ScoredPassage {
  const Passage* passage = nullptr;
  double score = 0.0;
};

// Okapi BM25 over case-folded word tokens with
//   idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5)).
// Each query token occurrence contributes its term's score. Immutable after
// construction; concurrent queries are safe.
class Bm25Index {
 public:
  Bm25Index(std::vector<Passage> passages, Bm25Params params = {});

  const std::vector<Passage>& passages() const { return passages_; }
  const Bm25Params& params() const { return params_; }
  std::size_t passage_count() const { return passages_.size(); }
  double average_length() const { return avg_length_; }
  std::uint64_t length(std::size_t passage_index) const { return lengths_[passage_index]; }
  std::uint64_t document_frequency(std::string_view term) const;
  double idf(std::string_view term) const;

  // Score of every passage for `query`, by passage index.
  std::vector<double> score_all(std::string_view query) const;

  // Passages sharing at least one term with the query, by descending score
  // then ascending passage id; at most k.
  std::vector<ScoredPassage> query_topk(std::string_view query, std::size_t k) const;

 private:
  struct Posting {
    std::uint32_t passage;
    std::uint32_t tf;
  };

  std::vector<Passage> passages_;
  Bm25Params params_;
  std::vector<std::uint64_t> lengths_;
  double avg_length_ = 0.0;
  std::unordered_map<std::string, std::vector<Posting>> terms_;
};

// Stores passages and parameters; term statistics are rebuilt on load.
std::string serialize(const Bm25Index& index);
Bm25Index deserialize_bm25(std::string_view bytes);
void save_bm25(const Bm25Index& index, const std::filesystem::path& path);
Bm25Index load_bm25(const std::filesystem::path& path);

std::vector<Passage> load_passages(const std::filesystem::path& path);
std::string to_jsonl(const Passage& p);

// True iff some alias, normalized, occurs as a contiguous run of the
// normalized tokens of `passage`. Aliases normalizing to "" never match.
bool contains_answer(std::string_view passage, const std::vector<std::string>& aliases);

struct RecallQuery {
  std::string id;
  std::uint64_t relevant_doc_count = 0;
  std::string question;
  std::vector<std::string> answers;
};

struct RecallCurve {
  std::size_t k = 0;
  BinCurve curve;
};

// 0-based rank of the first answer-bearing passage among the top `depth`,
// or `depth` if none.
std::size_t first_answer_rank(const Bm25Index& index, const RecallQuery& query, std::size_t depth);

// A question is recalled at k iff one of its top-k passages contains an
// answer alias. One curve per k, in the order given.
std::vector<RecallCurve> recall_curve(const std::vector<RecallQuery>& queries, const Bm25Index& index,
                                      const std::vector<std::size_t>& ks, const BinScheme& scheme = {});

// CSV with header k,bin_lo,bin_hi,n,value,trimmed.
std::string recall_to_csv(const std::vector<RecallCurve>& curves);

// 300 whitespace tokens around the first occurrence of `answer` in `page`,
// centred on the occurrence and shifted inward at page boundaries. Throws
// if the answer does not occur.
std::string oracle_context(std::string_view page, std::string_view answer,
                           std::size_t window = kMaxPassageTokens);

enum class PromptMode { kClosedBook, kBm25, kOracle };
PromptMode parse_prompt_mode(std::string_view name);

struct PromptExample {
  std::string question;
  std::string answer;                 // unused for the test question
  std::vector<std::string> passages;  // retrieved or gold context
};

// Few-shot prompt:
//   [passages, one per line]        (bm25 / oracle modes)
//   Q: <question>\nA: <answer>\n    (per shot, in order)
//   [passages]
//   Q: <test question>\nA:
// In bm25 mode every shot must carry a passage containing its answer.
std::string build_prompt(std::span<const PromptExample> incontext, const PromptExample& test,
                         PromptMode mode, std::size_t shots = 4);

}  // namespace ltk
