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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ltk/corpus_io.hpp"
#include "ltk/text.hpp"

namespace ltk {

using EntityId = std::string;

struct Candidate {
  EntityId entity;
  double prior = 0.0;
};

// Dictionary from normalized surface form to candidate entities. Surface
// forms are case-folded and matched at word-token granularity, so the key of
// an entry is its folded word tokens joined by single spaces.
class Gazetteer {
 public:
  static constexpr std::size_t kMinSurfaceLength = 2;

  // Adds a row; duplicate (surface, entity) pairs keep the larger prior.
  // Returns false (and adds nothing) if the surface is shorter than
  // kMinSurfaceLength code points after normalization or has no word tokens.
  bool add(std::string_view surface, std::string_view entity, double prior);

  // Candidates ordered by descending prior, then ascending entity id.
  const std::vector<Candidate>* find(std::string_view key) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::size_t max_tokens() const { return max_tokens_; }

  // Keys in sorted order.
  std::vector<std::string> keys() const;

  // Matching key for a surface form ("" when it has no word tokens).
  static std::string key_of(std::string_view surface);

  // Sorts candidate lists and checks that priors per surface sum to <= 1.
  void finalize();

 private:
  std::unordered_map<std::string, std::vector<Candidate>> entries_;
  std::size_t max_tokens_ = 0;
};

// Reads `surface<TAB>entity_id<TAB>prior` lines. Blank lines are ignored.
Gazetteer load_gazetteer(const std::filesystem::path& path);

struct EntityMention {
  EntityId entity;
  text::Span span;
  std::string surface;  // the gazetteer key that matched
};

// Greedy longest match over word tokens, left to right. Among candidates of
// the matched surface the highest prior wins, ties to the smallest id.
std::vector<EntityMention> link_text(const Gazetteer& gazetteer, std::string_view text);

struct LinkedDocument {
  DocId internal_id = 0;
  std::vector<EntityId> entities;  // sorted, unique

  friend bool operator==(const LinkedDocument&, const LinkedDocument&) = default;
};

// Sorted, deduplicated entity ids of a mention list.
std::vector<EntityId> entity_set(const std::vector<EntityMention>& mentions);

// Links every document, fanning shards out over `workers` threads. `sink`
// receives documents in internal-id order regardless of worker count.
void link_corpus(const Gazetteer& gazetteer, const CorpusManifest& manifest,
                 unsigned workers, const std::function<void(const LinkedDocument&)>& sink);

std::vector<LinkedDocument> link_corpus(const Gazetteer& gazetteer,
                                        const CorpusManifest& manifest, unsigned workers = 1);

// Reads {"doc_id": n, "entities": [...]} lines. With a manifest, doc ids
// must be below its document count.
void import_annotations(const std::filesystem::path& path, const CorpusManifest* manifest,
                        const std::function<void(const LinkedDocument&)>& sink);
std::vector<LinkedDocument> import_annotations(const std::filesystem::path& path,
                                               const CorpusManifest* manifest = nullptr);

// One jsonl line (no trailing newline) in the annotation format.
std::string to_jsonl(const LinkedDocument& doc);

}  // namespace ltk
