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

#include "ltk/cooc_index.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <queue>
#include <thread>

#include "ltk/error.hpp"
#include "ltk/io.hpp"
#include "ltk/text.hpp"

namespace ltk {
namespace fs = std::filesystem;

namespace {

constexpr std::string_view kIndexMagic = "LTKX";
constexpr std::string_view kShardMagic = "LTKS";

std::string range_string(const DocRange& r) {
  return "[" + std::to_string(r.begin) + ", " + std::to_string(r.end) + ")";
}

void encode_table(std::string& out, const PostingTable& table) {
  std::vector<std::string> lists;
  lists.reserve(table.entity_count());
  for (std::size_t i = 0; i < table.entity_count(); ++i) {
    std::string enc;
    DocId prev = 0;
    bool first = true;
    for (DocId id : table.postings_at(i)) {
      io::put_leb128(enc, first ? id : id - prev);
      prev = id;
      first = false;
    }
    lists.push_back(std::move(enc));
  }
  std::uint64_t offset = 0;
  for (std::size_t i = 0; i < table.entity_count(); ++i) {
    const auto& e = table.entities()[i];
    io::put_u32(out, static_cast<std::uint32_t>(e.size()));
    io::put_bytes(out, e);
    io::put_u64(out, offset);
    io::put_u64(out, lists[i].size());
    offset += lists[i].size();
  }
  for (const auto& l : lists) io::put_bytes(out, l);
}

PostingTable decode_table(io::ByteReader& in, DocRange range, std::uint64_t entity_count,
                          const std::string& what) {
  struct Entry {
    std::string_view entity;
    std::uint64_t offset;
    std::uint64_t length;
  };
  std::vector<Entry> entries;
  entries.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(entity_count, in.remaining() / 20)));
  for (std::uint64_t i = 0; i < entity_count; ++i) {
    const std::uint32_t len = in.u32();
    Entry e{in.bytes(len), 0, 0};
    e.offset = in.u64();
    e.length = in.u64();
    if (e.entity.empty() || !text::is_valid_utf8(e.entity)) {
      throw Error(what + ": invalid entity id in dictionary entry " + std::to_string(i));
    }
    if (!entries.empty() && !(entries.back().entity < e.entity)) {
      throw Error(what + ": dictionary not strictly sorted at entry " + std::to_string(i));
    }
    entries.push_back(e);
  }
  const std::string_view region = in.bytes(in.remaining());

  std::vector<const Entry*> by_offset;
  by_offset.reserve(entries.size());
  for (const auto& e : entries) by_offset.push_back(&e);
  std::sort(by_offset.begin(), by_offset.end(),
            [](const Entry* a, const Entry* b) { return a->offset < b->offset; });
  std::uint64_t expect = 0;
  for (const Entry* e : by_offset) {
    if (e->offset != expect || e->length > region.size() - expect) {
      throw Error(what + ": posting offsets do not tile the postings region");
    }
    expect += e->length;
  }
  if (expect != region.size()) {
    throw Error(what + ": postings region has " + std::to_string(region.size() - expect) +
                " unreferenced bytes");
  }

  PostingTable table(range);
  PostingList ids;
  for (const auto& e : entries) {
    ids.clear();
    io::ByteReader list(region.substr(e.offset, e.length), what + ": postings of " + std::string(e.entity));
    while (!list.done()) {
      const std::uint64_t v = list.leb128();
      if (ids.empty()) {
        ids.push_back(v);
      } else {
        if (v == 0 || v > std::numeric_limits<DocId>::max() - ids.back()) {
          throw Error(what + ": postings of " + std::string(e.entity) + " not strictly increasing");
        }
        ids.push_back(ids.back() + v);
      }
      if (!range.contains(ids.back())) {
        throw Error(what + ": posting " + std::to_string(ids.back()) + " of " +
                    std::string(e.entity) + " outside " + range_string(range));
      }
    }
    table.append(std::string(e.entity), ids);
  }
  return table;
}

void check_magic(io::ByteReader& in, std::string_view magic, const std::string& what) {
  if (in.remaining() < 4 || in.bytes(4) != magic) {
    throw Error(what + ": bad magic (expected " + std::string(magic) + ")");
  }
  const std::uint32_t version = in.u32();
  if (version != kIndexFormatVersion) {
    throw Error(what + ": unsupported format version " + std::to_string(version));
  }
}

}  // namespace

std::span<const DocId> PostingTable::postings(std::string_view entity) const {
  auto it = std::lower_bound(entities_.begin(), entities_.end(), entity,
                             [](const EntityId& a, std::string_view b) { return a < b; });
  if (it == entities_.end() || *it != entity) return {};
  return postings_at(static_cast<std::size_t>(it - entities_.begin()));
}

void PostingTable::append(EntityId entity, std::span<const DocId> postings) {
  if (!entities_.empty() && !(entities_.back() < entity)) {
    throw Error("entity '" + entity + "' appended out of order");
  }
  postings_.insert(postings_.end(), postings.begin(), postings.end());
  starts_.push_back(postings_.size());
  entities_.push_back(std::move(entity));
}

EntityIndex::EntityIndex(PostingTable table) : table_(std::move(table)) {
  if (table_.range().begin != 0) throw Error("an index must cover ids from 0");
}

std::uint64_t EntityIndex::count_entity(std::string_view entity) const {
  return postings(entity).size();
}

std::uint64_t EntityIndex::count_pair(std::string_view a, std::string_view b) const {
  if (a == b) return count_entity(a);
  return intersect(postings(a), postings(b));
}

PostingList EntityIndex::docs_for_pair(std::string_view a, std::string_view b) const {
  PostingList out;
  if (a == b) {
    auto p = postings(a);
    return {p.begin(), p.end()};
  }
  intersect(postings(a), postings(b), [&](DocId id) { out.push_back(id); });
  return out;
}

std::uint64_t intersect(std::span<const DocId> a, std::span<const DocId> b,
                        const std::function<void(DocId)>& emit) {
  if (a.size() > b.size()) std::swap(a, b);
  std::uint64_t n = 0;
  std::size_t lo = 0;
  for (DocId x : a) {
    // Exponential probe for the first element >= x, then binary search.
    std::size_t step = 1;
    std::size_t hi = lo;
    while (hi < b.size() && b[hi] < x) {
      lo = hi + 1;
      hi += step;
      step <<= 1;
    }
    hi = std::min(hi + 1, b.size());
    lo = static_cast<std::size_t>(std::lower_bound(b.begin() + lo, b.begin() + hi, x) - b.begin());
    if (lo == b.size()) break;
    if (b[lo] == x) {
      ++n;
      if (emit) emit(x);
      ++lo;
    }
  }
  return n;
}

IndexShard build_shard(const std::function<bool(LinkedDocument&)>& next, DocRange range) {
  if (range.end < range.begin) throw Error("invalid shard range " + range_string(range));
  std::map<EntityId, PostingList> lists;
  LinkedDocument doc;
  bool have_prev = false;
  DocId prev = 0;
  while (next(doc)) {
    if (!range.contains(doc.internal_id)) {
      throw Error("document " + std::to_string(doc.internal_id) + " outside shard range " +
                  range_string(range));
    }
    if (have_prev && doc.internal_id <= prev) {
      throw Error("linked documents not sorted by id at " + std::to_string(doc.internal_id));
    }
    have_prev = true;
    prev = doc.internal_id;
    for (const auto& e : doc.entities) {
      if (e.empty()) throw Error("empty entity id in document " + std::to_string(doc.internal_id));
      auto& l = lists[e];
      // Entity sets may carry duplicates when built by hand.
      if (l.empty() || l.back() != doc.internal_id) l.push_back(doc.internal_id);
    }
  }
  PostingTable table(range);
  for (auto& [e, l] : lists) table.append(e, l);
  return IndexShard(std::move(table));
}

IndexShard build_shard(std::span<const LinkedDocument> docs, DocRange range) {
  std::size_t i = 0;
  return build_shard(
      [&](LinkedDocument& d) {
        if (i == docs.size()) return false;
        d = docs[i++];
        return true;
      },
      range);
}

EntityIndex merge_shards(std::vector<IndexShard> shards) {
  if (shards.empty()) throw Error("no shards to merge");
  std::sort(shards.begin(), shards.end(), [](const IndexShard& a, const IndexShard& b) {
    return a.range().begin != b.range().begin ? a.range().begin < b.range().begin
                                              : a.range().end < b.range().end;
  });
  DocId covered = 0;
  for (const auto& s : shards) {
    if (s.range().begin < covered) {
      throw Error("overlapping shard ranges at " + range_string(s.range()));
    }
    if (s.range().begin > covered) {
      throw Error("shard ranges leave a gap before " + range_string(s.range()));
    }
    covered = s.range().end;
  }

  // k-way merge over the sorted dictionaries; shard order gives id order.
  using Cursor = std::pair<std::size_t, std::size_t>;  // (shard, entity index)
  auto greater = [&](const Cursor& x, const Cursor& y) {
    const auto& ex = shards[x.first].table().entities()[x.second];
    const auto& ey = shards[y.first].table().entities()[y.second];
    return ex != ey ? ex > ey : x.first > y.first;
  };
  std::priority_queue<Cursor, std::vector<Cursor>, decltype(greater)> heap(greater);
  for (std::size_t s = 0; s < shards.size(); ++s) {
    if (shards[s].table().entity_count() > 0) heap.push({s, 0});
  }
  PostingTable merged(DocRange{0, covered});
  PostingList buf;
  while (!heap.empty()) {
    const EntityId entity = shards[heap.top().first].table().entities()[heap.top().second];
    buf.clear();
    while (!heap.empty()) {
      auto [s, i] = heap.top();
      const auto& table = shards[s].table();
      if (table.entities()[i] != entity) break;
      heap.pop();
      auto p = table.postings_at(i);
      buf.insert(buf.end(), p.begin(), p.end());
      if (i + 1 < table.entity_count()) heap.push({s, i + 1});
    }
    merged.append(entity, buf);
  }
  return EntityIndex(std::move(merged));
}

std::vector<DocRange> split_range(std::uint64_t n, std::size_t k) {
  k = std::max<std::size_t>(k, 1);
  std::vector<DocRange> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back({n * i / k, n * (i + 1) / k});
  }
  return out;
}

EntityIndex build_index(std::span<const LinkedDocument> docs, std::uint64_t document_count,
                        std::size_t shard_count, unsigned workers) {
  const auto ranges = split_range(document_count, shard_count);
  std::vector<std::span<const LinkedDocument>> parts;
  std::size_t start = 0;
  for (const auto& r : ranges) {
    std::size_t end = start;
    while (end < docs.size() && docs[end].internal_id < r.end) ++end;
    parts.push_back(docs.subspan(start, end - start));
    start = end;
  }
  if (start != docs.size()) {
    throw Error("document " + std::to_string(docs[start].internal_id) +
                " outside corpus of " + std::to_string(document_count) + " documents");
  }
  std::vector<IndexShard> shards(ranges.size());
  workers = std::max(1u, workers);
  if (workers == 1 || ranges.size() == 1) {
    for (std::size_t i = 0; i < ranges.size(); ++i) shards[i] = build_shard(parts[i], ranges[i]);
  } else {
    std::vector<std::exception_ptr> errors(ranges.size());
    std::atomic<std::size_t> next{0};
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t i; (i = next++) < ranges.size();) {
            try {
              shards[i] = build_shard(parts[i], ranges[i]);
            } catch (...) {
              errors[i] = std::current_exception();
            }
          }
        });
      }
    }
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return merge_shards(std::move(shards));
}

std::string serialize(const EntityIndex& index) {
  std::string out;
  io::put_bytes(out, kIndexMagic);
  io::put_u32(out, kIndexFormatVersion);
  io::put_u64(out, index.document_count());
  io::put_u64(out, index.entity_count());
  encode_table(out, index.table());
  return out;
}

std::string serialize(const IndexShard& shard) {
  std::string out;
  io::put_bytes(out, kShardMagic);
  io::put_u32(out, kIndexFormatVersion);
  io::put_u64(out, shard.range().begin);
  io::put_u64(out, shard.range().end);
  io::put_u64(out, shard.table().entity_count());
  encode_table(out, shard.table());
  return out;
}

EntityIndex deserialize_index(std::string_view bytes) {
  const std::string what = "entity index";
  io::ByteReader in(bytes, what);
  check_magic(in, kIndexMagic, what);
  const std::uint64_t docs = in.u64();
  const std::uint64_t entities = in.u64();
  return EntityIndex(decode_table(in, DocRange{0, docs}, entities, what));
}

IndexShard deserialize_shard(std::string_view bytes) {
  const std::string what = "index shard";
  io::ByteReader in(bytes, what);
  check_magic(in, kShardMagic, what);
  DocRange range;
  range.begin = in.u64();
  range.end = in.u64();
  if (range.end < range.begin) throw Error(what + ": invalid range " + range_string(range));
  const std::uint64_t entities = in.u64();
  return IndexShard(decode_table(in, range, entities, what));
}

void save_index(const EntityIndex& index, const fs::path& path) {
  io::write_file_atomic(path, serialize(index));
}

EntityIndex load_index(const fs::path& path) {
  try {
    return deserialize_index(io::read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void save_shard(const IndexShard& shard, const fs::path& path) {
  io::write_file_atomic(path, serialize(shard));
}

IndexShard load_shard(const fs::path& path) {
  try {
    return deserialize_shard(io::read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace ltk
