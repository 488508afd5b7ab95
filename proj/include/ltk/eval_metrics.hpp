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
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "ltk/cooc_index.hpp"
#include "ltk/qa_linker.hpp"

namespace ltk {

// SQuAD-style answer normalization: case-fold, drop punctuation, drop the
// whole words a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

// True iff the normalized prediction equals some normalized gold answer.
bool exact_match(std::string_view prediction, const std::vector<std::string>& golds);

struct PredictionRecord {
  std::string id;
  std::string prediction;
};

// {"id", "prediction"} lines; ids must be unique and the file non-empty.
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Log-binned curves.

struct BinScheme {
  static constexpr int kBase = 10;
  std::uint64_t min_samples_per_bin = 500;
};

struct ScoredRecord {
  std::uint64_t count = 0;  // relevant documents, >= 1
  double value = 0.0;       // 0/1 correctness, or a score in [0,1]
};

struct Bin {
  int exponent = 0;  // bin covers [10^exponent, 10^(exponent+1))
  std::uint64_t n = 0;
  double mean = 0.0;
  bool trimmed = false;
};

struct BinCurve {
  std::vector<Bin> bins;  // every occupied bin, ascending; trimmed ones flagged

  // Bins that meet the sample minimum.
  std::vector<Bin> reported() const;
};

// floor(log10(count)) computed exactly on integers. count must be >= 1.
int bin_exponent(std::uint64_t count);

BinCurve accuracy_by_bin(const std::vector<ScoredRecord>& records, const BinScheme& scheme = {});

// CSV with header bin_lo,bin_hi,n,value,trimmed.
std::string curve_to_csv(const BinCurve& curve);

// ---------------------------------------------------------------------------
// Human leave-one-annotator-out accuracy.

struct RatedExample {
  std::string id;
  std::vector<std::vector<std::string>> raters;  // an empty set means "no answer"
};

struct ScoredExample {
  std::string id;
  double value = 0.0;
};

// Each rater is scored against the union of the others' answers: correct iff
// any of its answers exact-matches any of theirs. An unanswered rater is
// correct iff another rater also left the example unanswered.
double human_loo_accuracy(const RatedExample& example);
std::vector<ScoredExample> human_loo_accuracy(const std::vector<RatedExample>& examples);

std::vector<RatedExample> load_annotations(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Baseline document-count heuristics.

enum class HeuristicMode { kPair, kQuestionOnly, kAnswerOnly };
HeuristicMode parse_heuristic_mode(std::string_view name);

struct HeuristicCount {
  std::string id;
  std::uint64_t count = 0;
  std::uint64_t pair_count = 0;
};

// Linked rows only; others are skipped.
std::vector<HeuristicCount> heuristic_counts(const std::vector<LinkedQA>& rows,
                                             const EntityIndex& index, HeuristicMode mode);

// Keeps records whose question/answer pair co-occurs fewer than
// `max_pair_count` times.
std::vector<HeuristicCount> subpopulation_filter(const std::vector<HeuristicCount>& records,
                                                 std::uint64_t max_pair_count = 5);

// ---------------------------------------------------------------------------
// Relevance audit.

struct AuditItem {
  std::string qa_id;
  DocId doc_id = 0;

  friend bool operator==(const AuditItem&, const AuditItem&) = default;
};

// n distinct linked QA pairs, each with one uniformly drawn relevant document.
std::vector<AuditItem> audit_sample(const std::vector<LinkedQA>& rows, const EntityIndex& index,
                                    std::size_t n = 300, std::uint64_t seed = 0);

enum class AuditLabel { kFull, kPartial, kNone };
AuditLabel parse_audit_label(std::string_view name);

struct AuditPrecision {
  std::uint64_t total = 0;
  double full = 0.0;
  double partial = 0.0;
  double none = 0.0;
  double precision() const { return full + partial; }
};

AuditPrecision audit_precision(const std::vector<AuditLabel>& labels);

}  // namespace ltk
