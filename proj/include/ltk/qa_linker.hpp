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
#include "ltk/entity_linker.hpp"
#include "ltk/io.hpp"

namespace ltk {

struct QAExample {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  // Gold page text, used only for oracle-context prompts.
  std::string context;
};

enum class LinkStatus { kLinked, kNoQuestionEntity, kNoAnswerEntity, kZeroRelevantDocs };

std::string_view to_string(LinkStatus status);
LinkStatus parse_link_status(std::string_view name);

struct LinkedQA {
  std::string id;
  LinkStatus status = LinkStatus::kNoAnswerEntity;
  EntityId question_entity;
  EntityId answer_entity;
  std::uint64_t relevant_doc_count = 0;
  std::uint64_t question_entity_count = 0;
  std::uint64_t answer_entity_count = 0;
  // Raw tallies: aliases mentioning each answer candidate, and
  // co-occurrence with the salient answer for each question candidate.
  std::map<EntityId, std::uint64_t> answer_alias_tally;
  std::map<EntityId, std::uint64_t> question_candidates;

  bool linked() const { return status == LinkStatus::kLinked; }
  friend bool operator==(const LinkedQA&, const LinkedQA&) = default;
};

// Separator placed between the question and each alias. Surfaces never
// match across it.
inline constexpr std::string_view kQASeparator = " \n ";

// The text the linker sees: question and aliases joined by kQASeparator.
std::string qa_link_text(const QAExample& ex);

LinkedQA link_qa_example(const QAExample& ex, const Gazetteer& gazetteer,
                         const EntityIndex& index);

struct DiscardStats {
  std::uint64_t total = 0;
  std::uint64_t linked = 0;
  std::uint64_t no_question_entity = 0;
  std::uint64_t no_answer_entity = 0;
  std::uint64_t zero_relevant_docs = 0;

  friend bool operator==(const DiscardStats&, const DiscardStats&) = default;
};

struct LinkedQATable {
  std::vector<LinkedQA> rows;
  DiscardStats stats;
};

// One row per example, in input order. Duplicate ids are an error.
LinkedQATable link_qa_dataset(const std::vector<QAExample>& examples, const Gazetteer& gazetteer,
                              const EntityIndex& index, unsigned workers = 1);

// Reads {"id", "question", "answers": [...], "context"?} lines.
std::vector<QAExample> load_qa_examples(const std::filesystem::path& path);
std::string to_jsonl(const QAExample& ex);

// Held-out few-shot pool: the first `n` examples in input order.
struct HoldoutSplit {
  std::vector<QAExample> holdout;
  std::vector<QAExample> rest;
};
HoldoutSplit split_holdout(std::vector<QAExample> examples, std::size_t n);

std::string to_jsonl(const LinkedQA& row);
LinkedQA linked_qa_from_json(const nlohmann::ordered_json& j);
std::vector<LinkedQA> load_linked_qa(const std::filesystem::path& path);
std::string stats_to_json(const DiscardStats& stats, std::uint64_t held_out = 0);

}  // namespace ltk
