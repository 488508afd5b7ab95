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

#include "ltk/qa_linker.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>
#include <unordered_set>

#include "ltk/error.hpp"

namespace ltk {
namespace fs = std::filesystem;
using io::Json;

std::string_view to_string(LinkStatus status) {
  switch (status) {
    case LinkStatus::kLinked: return "Linked";
    case LinkStatus::kNoQuestionEntity: return "NoQuestionEntity";
    case LinkStatus::kNoAnswerEntity: return "NoAnswerEntity";
    case LinkStatus::kZeroRelevantDocs: return "ZeroRelevantDocs";
  }
  return "?";
}

LinkStatus parse_link_status(std::string_view name) {
  for (auto s : {LinkStatus::kLinked, LinkStatus::kNoQuestionEntity, LinkStatus::kNoAnswerEntity,
                 LinkStatus::kZeroRelevantDocs}) {
    if (to_string(s) == name) return s;
  }
  throw Error("unknown link status '" + std::string(name) + "'");
}

std::string qa_link_text(const QAExample& ex) {
  std::string out = ex.question;
  for (const auto& a : ex.answers) {
    out += kQASeparator;
    out += a;
  }
  return out;
}

LinkedQA link_qa_example(const QAExample& ex, const Gazetteer& gazetteer,
                         const EntityIndex& index) {
  // Linking each segment on its own is linking the concatenation with hard
  // boundaries at the separators.
  LinkedQA row;
  row.id = ex.id;
  for (const auto& alias : ex.answers) {
    for (const auto& e : entity_set(link_text(gazetteer, alias))) ++row.answer_alias_tally[e];
  }
  const auto question_entities = entity_set(link_text(gazetteer, ex.question));

  std::uint64_t best_tally = 0;
  for (const auto& [e, n] : row.answer_alias_tally) {
    if (n > best_tally) {
      best_tally = n;
      row.answer_entity = e;
    }
  }
  if (row.answer_entity.empty()) {
    row.status = LinkStatus::kNoAnswerEntity;
    return row;
  }
  row.answer_entity_count = index.count_entity(row.answer_entity);
  if (question_entities.empty()) {
    row.status = LinkStatus::kNoQuestionEntity;
    return row;
  }

  bool first = true;
  for (const auto& q : question_entities) {
    const std::uint64_t c = index.count_pair(q, row.answer_entity);
    row.question_candidates[q] = c;
    if (first || c > row.relevant_doc_count) {
      row.question_entity = q;
      row.relevant_doc_count = c;
      first = false;
    }
  }
  row.question_entity_count = index.count_entity(row.question_entity);
  row.status = row.relevant_doc_count == 0 ? LinkStatus::kZeroRelevantDocs : LinkStatus::kLinked;
  return row;
}

LinkedQATable link_qa_dataset(const std::vector<QAExample>& examples, const Gazetteer& gazetteer,
                              const EntityIndex& index, unsigned workers) {
  std::unordered_set<std::string_view> seen;
  for (const auto& ex : examples) {
    if (!seen.insert(ex.id).second) throw Error("duplicate QA example id '" + ex.id + "'");
  }
  LinkedQATable table;
  table.rows.resize(examples.size());
  workers = std::max(1u, workers);
  if (workers == 1) {
    for (std::size_t i = 0; i < examples.size(); ++i) {
      table.rows[i] = link_qa_example(examples[i], gazetteer, index);
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i; (i = next++) < examples.size();) {
          table.rows[i] = link_qa_example(examples[i], gazetteer, index);
        }
      });
    }
  }
  auto& s = table.stats;
  s.total = examples.size();
  for (const auto& r : table.rows) {
    switch (r.status) {
      case LinkStatus::kLinked: ++s.linked; break;
      case LinkStatus::kNoQuestionEntity: ++s.no_question_entity; break;
      case LinkStatus::kNoAnswerEntity: ++s.no_answer_entity; break;
      case LinkStatus::kZeroRelevantDocs: ++s.zero_relevant_docs; break;
    }
  }
  return table;
}

std::vector<QAExample> load_qa_examples(const fs::path& path) {
  std::vector<QAExample> out;
  io::for_each_json_line(path, [&](const Json& j, std::uint64_t n) {
    const auto bad = [&](const std::string& why) {
      return Error(path.string() + ":" + std::to_string(n) + ": " + why);
    };
    QAExample ex;
    const auto id = j.find("id");
    if (id == j.end()) throw bad("missing \"id\"");
    ex.id = id->is_string() ? id->get<std::string>() : id->dump();
    ex.question = j.at("question").get<std::string>();
    if (text::is_blank(ex.question)) throw bad("empty question");
    for (const auto& a : j.at("answers")) ex.answers.push_back(a.get<std::string>());
    if (ex.answers.empty()) throw bad("no answers");
    if (auto c = j.find("context"); c != j.end() && c->is_string()) ex.context = c->get<std::string>();
    out.push_back(std::move(ex));
  });
  return out;
}

std::string to_jsonl(const QAExample& ex) {
  Json j;
  j["id"] = ex.id;
  j["question"] = ex.question;
  j["answers"] = ex.answers;
  if (!ex.context.empty()) j["context"] = ex.context;
  return j.dump();
}

HoldoutSplit split_holdout(std::vector<QAExample> examples, std::size_t n) {
  HoldoutSplit split;
  n = std::min(n, examples.size());
  split.holdout.assign(std::make_move_iterator(examples.begin()),
                       std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(n)));
  split.rest.assign(std::make_move_iterator(examples.begin() + static_cast<std::ptrdiff_t>(n)),
                    std::make_move_iterator(examples.end()));
  return split;
}

std::string to_jsonl(const LinkedQA& row) {
  Json j;
  j["id"] = row.id;
  j["status"] = std::string(to_string(row.status));
  j["question_entity"] = row.question_entity;
  j["answer_entity"] = row.answer_entity;
  j["relevant_doc_count"] = row.relevant_doc_count;
  j["question_entity_count"] = row.question_entity_count;
  j["answer_entity_count"] = row.answer_entity_count;
  j["answer_alias_tally"] = Json::object();
  for (const auto& [e, n] : row.answer_alias_tally) j["answer_alias_tally"][e] = n;
  j["question_candidates"] = Json::object();
  for (const auto& [e, n] : row.question_candidates) j["question_candidates"][e] = n;
  return j.dump();
}

LinkedQA linked_qa_from_json(const Json& j) {
  LinkedQA row;
  row.id = j.at("id").get<std::string>();
  row.status = parse_link_status(j.at("status").get<std::string>());
  row.question_entity = j.value("question_entity", "");
  row.answer_entity = j.value("answer_entity", "");
  row.relevant_doc_count = j.value("relevant_doc_count", std::uint64_t{0});
  row.question_entity_count = j.value("question_entity_count", std::uint64_t{0});
  row.answer_entity_count = j.value("answer_entity_count", std::uint64_t{0});
  if (auto t = j.find("answer_alias_tally"); t != j.end()) {
    for (const auto& [k, v] : t->items()) row.answer_alias_tally[k] = v.get<std::uint64_t>();
  }
  if (auto t = j.find("question_candidates"); t != j.end()) {
    for (const auto& [k, v] : t->items()) row.question_candidates[k] = v.get<std::uint64_t>();
  }
  if (row.linked() && (row.relevant_doc_count == 0 || row.question_entity.empty() ||
                       row.answer_entity.empty())) {
    throw Error("linked record '" + row.id + "' lacks entities or relevant documents");
  }
  return row;
}

std::vector<LinkedQA> load_linked_qa(const fs::path& path) {
  std::vector<LinkedQA> out;
  io::for_each_json_line(path, [&](const Json& j, std::uint64_t n) {
    try {
      out.push_back(linked_qa_from_json(j));
    } catch (const Error& e) {
      throw Error(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  });
  return out;
}

std::string stats_to_json(const DiscardStats& s, std::uint64_t held_out) {
  Json j;
  j["total"] = s.total;
  j["linked"] = s.linked;
  j["discarded"] = {{"NoAnswerEntity", s.no_answer_entity},
                    {"NoQuestionEntity", s.no_question_entity},
                    {"ZeroRelevantDocs", s.zero_relevant_docs}};
  j["held_out"] = held_out;
  return j.dump(2) + "\n";
}

}  // namespace ltk
