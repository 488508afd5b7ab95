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
#include <string>
#include <vector>

#include "ltk/cooc_index.hpp"
#include "ltk/corpus_io.hpp"
#include "ltk/qa_linker.hpp"

namespace ltk {

struct SampledQA {
  std::string id;
  EntityId question_entity;
  EntityId answer_entity;
  std::uint64_t relevant_doc_count = 0;

  friend bool operator==(const SampledQA&, const SampledQA&) = default;
};

struct BinSample {
  int exponent = 0;            // log10 bin of relevant_doc_count
  std::uint64_t available = 0;  // linked records in the bin
  std::vector<SampledQA> questions;

  friend bool operator==(const BinSample&, const BinSample&) = default;
};

struct CounterfactualSample {
  std::uint64_t seed = 0;
  std::uint64_t n_per_bin = 100;
  std::vector<BinSample> bins;  // ascending exponent, occupied bins only

  friend bool operator==(const CounterfactualSample&, const CounterfactualSample&) = default;
};

// Up to n_per_bin uniform draws without replacement from every occupied
// log10 bin of linked rows; smaller bins contribute all of their rows.
// Within a bin, sampled rows keep table order.
CounterfactualSample sample_per_bin(const std::vector<LinkedQA>& rows, std::uint64_t n_per_bin = 100,
                                    std::uint64_t seed = 0);

// Union of relevant documents of every sampled question, sorted.
PostingList removal_set(const CounterfactualSample& sample, const EntityIndex& index);

struct RemovalManifest {
  std::uint64_t seed = 0;
  std::uint64_t original_documents = 0;
  std::uint64_t removed_documents = 0;
  std::uint64_t kept_documents = 0;
  double removed_fraction = 0.0;
};

struct FilterOutputs {
  std::filesystem::path corpus;    // filtered jsonl corpus
  std::filesystem::path manifest;  // removal manifest JSON (optional)
  std::filesystem::path id_map;    // old_id,new_id CSV (optional)
};

// Writes every non-removed document in original order. jsonl records are
// copied byte for byte; textdir documents become {"id": <relative path>,
// "text"} records. Kept documents get dense new ids in output order.
RemovalManifest filter_corpus(const CorpusManifest& manifest, const PostingList& removal,
                              const FilterOutputs& outputs, const CounterfactualSample* sample = nullptr);

std::string sample_to_json(const CounterfactualSample& sample);
CounterfactualSample sample_from_json(std::string_view json);
std::string removal_manifest_to_json(const RemovalManifest& m, const CounterfactualSample* sample);

}  // namespace ltk
