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
#include <vector>

namespace ltk {

using DocId = std::uint64_t;

struct Document {
  DocId internal_id = 0;
  std::optional<std::string> external_id;
  std::string text;
};

enum class CorpusFormat { kJsonl, kTextDir };

CorpusFormat parse_corpus_format(std::string_view name);
std::string_view to_string(CorpusFormat format);

// One ingested input. For jsonl shards `record_offsets` holds the byte
// offset of each kept record; for textdir shards `files` holds one path per
// document in lexicographic order.
struct ShardInfo {
  std::filesystem::path path;
  DocId first_id = 0;
  std::uint64_t document_count = 0;
  std::uint64_t skipped = 0;
  std::uint64_t byte_size = 0;
  std::vector<std::uint64_t> record_offsets;
  std::vector<std::filesystem::path> files;
};

// Immutable description of a corpus: shards in ingestion order with dense
// internal ids. Safe for concurrent readers.
class CorpusManifest {
 public:
  CorpusManifest() = default;
  CorpusManifest(CorpusFormat format, std::vector<ShardInfo> shards);

  CorpusFormat format() const { return format_; }
  const std::vector<ShardInfo>& shards() const { return shards_; }
  std::uint64_t total_documents() const { return total_; }
  std::uint64_t skipped_records() const;

  // Shard holding `id`. Throws if out of range.
  std::size_t shard_of(DocId id) const;

  friend bool operator==(const CorpusManifest&, const CorpusManifest&);

 private:
  CorpusFormat format_ = CorpusFormat::kJsonl;
  std::vector<ShardInfo> shards_;
  std::uint64_t total_ = 0;
};

// Ingests shards in the given order. jsonl shards hold one {"id"?, "text"}
// object per line; textdir inputs are directories whose regular files (found
// recursively, ordered by path) are one document each. Records whose text is
// empty or whitespace-only are skipped and tallied.
CorpusManifest ingest_corpus(const std::vector<std::filesystem::path>& paths,
                             CorpusFormat format);

Document get_document(const CorpusManifest& manifest, DocId id);

// Streams the documents of one shard in id order. For jsonl shards `raw`
// is the original record line; for textdir shards it is empty.
using DocumentVisitor = std::function<void(const Document&, std::string_view raw)>;
void for_each_document(const CorpusManifest& manifest, std::size_t shard,
                       const DocumentVisitor& visit);
void for_each_document(const CorpusManifest& manifest, const DocumentVisitor& visit);

// Manifest files are JSON. Loading re-scans every shard to rebuild record
// offsets and fails if a shard no longer matches its recorded size or count.
std::string manifest_to_json(const CorpusManifest& manifest);
void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest load_manifest(const std::filesystem::path& path);

}  // namespace ltk
