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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ltk/corpus_io.hpp"
#include "ltk/entity_linker.hpp"

namespace ltk {

// Strictly increasing internal document ids.
using PostingList = std::vector<DocId>;

// Half-open range of internal document ids.
struct DocRange {
  DocId begin = 0;
  DocId end = 0;

  bool contains(DocId id) const { return id >= begin && id < end; }
  friend bool operator==(const DocRange&, const DocRange&) = default;
};

// Entity -> posting list over a contiguous document range. Entities are kept
// sorted lexicographically; postings live decoded in one flat array so
// queries are span lookups plus a galloping intersection.
class PostingTable {
 public:
  PostingTable() = default;
  explicit PostingTable(DocRange range) : range_(range) {}

  const DocRange& range() const { return range_; }
  std::size_t entity_count() const { return entities_.size(); }
  std::uint64_t posting_count() const { return postings_.size(); }
  const std::vector<EntityId>& entities() const { return entities_; }

  // Empty span for unknown entities.
  std::span<const DocId> postings(std::string_view entity) const;
  std::span<const DocId> postings_at(std::size_t i) const {
    return {postings_.data() + starts_[i], postings_.data() + starts_[i + 1]};
  }

  // Appends an entity; ids must arrive in sorted order with valid postings.
  void append(EntityId entity, std::span<const DocId> postings);

  friend bool operator==(const PostingTable&, const PostingTable&) = default;

 private:
  DocRange range_;
  std::vector<EntityId> entities_;
  std::vector<std::uint64_t> starts_{0};
  std::vector<DocId> postings_;
};

// One parallel build unit covering part of the corpus id space.
class IndexShard {
 public:
  IndexShard() = default;
  explicit IndexShard(PostingTable table) : table_(std::move(table)) {}

  const DocRange& range() const { return table_.range(); }
  const PostingTable& table() const { return table_; }

  friend bool operator==(const IndexShard&, const IndexShard&) = default;

 private:
  PostingTable table_;
};

// Immutable entity -> document index over a whole corpus. Safe for
// concurrent readers.
class EntityIndex {
 public:
  EntityIndex() = default;
  explicit EntityIndex(PostingTable table);

  std::uint64_t document_count() const { return table_.range().end; }
  std::size_t entity_count() const { return table_.entity_count(); }
  const PostingTable& table() const { return table_; }

  std::span<const DocId> postings(std::string_view entity) const {
    return table_.postings(entity);
  }

  // Documents containing `entity`; 0 when absent.
  std::uint64_t count_entity(std::string_view entity) const;

  // Documents containing both entities. count_pair(e, e) == count_entity(e).
  std::uint64_t count_pair(std::string_view a, std::string_view b) const;

  PostingList docs_for_pair(std::string_view a, std::string_view b) const;

  friend bool operator==(const EntityIndex&, const EntityIndex&) = default;

 private:
  PostingTable table_;
};

// Galloping intersection driven by the shorter list. `emit` is called for
// each common id in increasing order; returns the number of common ids.
std::uint64_t intersect(std::span<const DocId> a, std::span<const DocId> b,
                        const std::function<void(DocId)>& emit = {});

// Builds a shard from linked documents sorted by strictly increasing id,
// all within `range`.
IndexShard build_shard(std::span<const LinkedDocument> docs, DocRange range);

// Streaming form: `next` fills the next document and returns false at end.
IndexShard build_shard(const std::function<bool(LinkedDocument&)>& next, DocRange range);

// Shards must be disjoint and together cover [0, N). Input order does not
// affect the result.
EntityIndex merge_shards(std::vector<IndexShard> shards);

// Convenience: splits [0, document_count) into `shard_count` contiguous
// ranges, builds them on up to `workers` threads and merges.
EntityIndex build_index(std::span<const LinkedDocument> docs, std::uint64_t document_count,
                        std::size_t shard_count = 1, unsigned workers = 1);

// Partitions [0, n) into k near-equal contiguous ranges (k clamped to >= 1).
std::vector<DocRange> split_range(std::uint64_t n, std::size_t k);

// Binary format (all integers little-endian):
//   index: "LTKX" u32 version=1, u64 document_count, u64 entity_count,
//   shard: "LTKS" u32 version=1, u64 range_begin, u64 range_end, u64 entity_count,
// followed in both cases by entity_count dictionary entries
//   (u32 byte length + UTF-8 entity id, u64 offset, u64 byte_length),
// sorted by entity id, then the postings region. Offsets are relative to
// the start of the postings region; entries tile it exactly. Each posting
// list is LEB128 deltas (first id verbatim).
inline constexpr std::uint32_t kIndexFormatVersion = 1;

std::string serialize(const EntityIndex& index);
std::string serialize(const IndexShard& shard);
EntityIndex deserialize_index(std::string_view bytes);
IndexShard deserialize_shard(std::string_view bytes);

void save_index(const EntityIndex& index, const std::filesystem::path& path);
EntityIndex load_index(const std::filesystem::path& path);
void save_shard(const IndexShard& shard, const std::filesystem::path& path);
IndexShard load_shard(const std::filesystem::path& path);

}  // namespace ltk
