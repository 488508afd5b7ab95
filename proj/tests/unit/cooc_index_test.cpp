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

#include <doctest.h>

#include "fixtures.hpp"
#include "ltk/cooc_index.hpp"
#include "ltk/error.hpp"
#include "ltk/io.hpp"

using namespace ltk;
using namespace ltk::testing;

namespace {

std::vector<LinkedDocument> three_docs() {
  return {{0, {"A", "B"}}, {1, {"A", "B", "C"}}, {2, {"C"}}};
}

}  // namespace

TEST_CASE("three document corpus") {
  const auto idx = build_index(three_docs(), 3);
  CHECK(idx.document_count() == 3);
  CHECK(idx.count_entity("A") == 2);
  CHECK(idx.count_pair("A", "B") == 2);
  CHECK(idx.count_pair("B", "A") == 2);
  CHECK(idx.count_pair("A", "C") == 1);
  CHECK(idx.count_pair("A", "A") == 2);
  CHECK(idx.count_pair("A", "Z") == 0);
  CHECK(idx.docs_for_pair("B", "C") == PostingList{1});
}

TEST_CASE("galloping intersection matches a linear merge") {
  Rng rng(3);
  for (int round = 0; round < 300; ++round) {
    std::set<DocId> sa;
    std::set<DocId> sb;
    const auto na = rng.below(200);
    const auto nb = rng.below(5) == 0 ? rng.below(2000) : rng.below(20);
    for (std::uint64_t i = 0; i < na; ++i) sa.insert(rng.below(5000));
    for (std::uint64_t i = 0; i < nb; ++i) sb.insert(rng.below(5000));
    const PostingList a(sa.begin(), sa.end());
    const PostingList b(sb.begin(), sb.end());
    PostingList want;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(want));
    PostingList got;
    CHECK(intersect(a, b, [&](DocId d) { got.push_back(d); }) == want.size());
    CHECK(got == want);
    CHECK(intersect(b, a) == want.size());
  }
}

TEST_CASE("posting lists are delta LEB128 with a fixed header") {
  const auto idx = build_index(std::vector<LinkedDocument>{{0, {"A"}}, {200, {"A"}}}, 201);
  const std::string bytes = serialize(idx);
  std::string want = "LTKX";
  io::put_u32(want, 1);
  io::put_u64(want, 201);
  io::put_u64(want, 1);
  io::put_u32(want, 1);
  want += "A";
  io::put_u64(want, 0);
  io::put_u64(want, 3);
  want += std::string("\x00\xC8\x01", 3);
  CHECK(bytes == want);
}

TEST_CASE("corrupt or mismatched index files fail closed") {
  const std::string good = serialize(build_index(three_docs(), 3));
  CHECK(deserialize_index(good) == build_index(three_docs(), 3));
  for (std::size_t cut = 0; cut < good.size(); ++cut) {
    CHECK_THROWS_AS(deserialize_index(good.substr(0, cut)), Error);
  }
  std::string bad_magic = good;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(deserialize_index(bad_magic), Error);
  std::string bad_version = good;
  bad_version[4] = 2;
  CHECK_THROWS_AS(deserialize_index(bad_version), Error);
  CHECK_THROWS_AS(deserialize_index(good + "x"), Error);
  CHECK_THROWS_AS(deserialize_shard(good), Error);
}

TEST_CASE("build rejects unsorted input and out-of-range ids") {
  CHECK_THROWS_AS(build_shard(std::vector<LinkedDocument>{{1, {"A"}}, {0, {"A"}}}, {0, 2}), Error);
  CHECK_THROWS_AS(build_shard(std::vector<LinkedDocument>{{5, {"A"}}}, {0, 2}), Error);
  CHECK_THROWS_AS(build_index(std::vector<LinkedDocument>{{3, {"A"}}}, 3), Error);
}

TEST_CASE("merge rejects gaps and overlaps") {
  const auto docs = three_docs();
  const std::vector<LinkedDocument> first(docs.begin(), docs.begin() + 1);
  const std::vector<LinkedDocument> rest(docs.begin() + 1, docs.end());
  CHECK_THROWS_AS(merge_shards({build_shard(first, {0, 1}), build_shard(rest, {2, 3})}), Error);
  CHECK_THROWS_AS(merge_shards({build_shard(first, {0, 2}), build_shard(rest, {1, 3})}), Error);
  CHECK(merge_shards({build_shard(rest, {1, 3}), build_shard(first, {0, 1})}) ==
        build_index(docs, 3));
}

TEST_CASE("split_range covers the range") {
  for (std::uint64_t n : {0u, 1u, 7u, 100u}) {
    for (std::size_t k : {1u, 3u, 8u}) {
      const auto parts = split_range(n, k);
      DocId next = 0;
      for (const auto& p : parts) {
        CHECK(p.begin == next);
        next = p.end;
      }
      CHECK(next == n);
    }
  }
}

TEST_CASE("random corpora agree with brute force under any partition") {
  Rng rng(99);
  TempDir dir;
  for (int round = 0; round < 25; ++round) {
    const auto c = random_corpus(rng, 300, 25);
    const auto parts = random_partition(rng, c.document_count, 1 + rng.below(8));
    std::vector<IndexShard> shards;
    for (const auto& r : parts) shards.push_back(build_shard(docs_in(c, r), r));
    const auto merged = merge_shards(shards);
    CHECK(check_against_oracle(merged, c) == "");
    CHECK(build_index(c.docs, c.document_count, 1 + rng.below(4), 2) == merged);

    save_index(merged, dir / "i.bin");
    CHECK(load_index(dir / "i.bin") == merged);
    save_shard(shards[0], dir / "s.bin");
    CHECK(load_shard(dir / "s.bin") == shards[0]);

    for (const auto& a : c.entities) {
      for (const auto& b : c.entities) {
        CHECK(merged.count_pair(a, b) <= std::min(merged.count_entity(a), merged.count_entity(b)));
        const auto docs = merged.docs_for_pair(a, b);
        CHECK(std::adjacent_find(docs.begin(), docs.end(), std::greater_equal<>()) == docs.end());
      }
    }
  }
}
