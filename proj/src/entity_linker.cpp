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

#include "ltk/entity_linker.hpp"

#include <algorithm>
#include <charconv>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "ltk/error.hpp"
#include "ltk/io.hpp"

namespace ltk {
namespace fs = std::filesystem;
using io::Json;

std::string Gazetteer::key_of(std::string_view surface) {
  std::string key;
  for (const auto& w : text::folded_words(surface)) {
    if (!key.empty()) key.push_back(' ');
    key += w;
  }
  return key;
}

bool Gazetteer::add(std::string_view surface, std::string_view entity, double prior) {
  const std::string normalized = text::collapse_whitespace(text::casefold(surface));
  if (text::length(normalized) < kMinSurfaceLength) return false;
  std::string key = key_of(normalized);
  if (key.empty()) return false;
  max_tokens_ = std::max(max_tokens_,
                         static_cast<std::size_t>(std::count(key.begin(), key.end(), ' ') + 1));
  auto& cands = entries_[std::move(key)];
  for (auto& c : cands) {
    if (c.entity == entity) {
      c.prior = std::max(c.prior, prior);
      return true;
    }
  }
  cands.push_back({EntityId(entity), prior});
  return true;
}

void Gazetteer::finalize() {
  for (auto& [key, cands] : entries_) {
    std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.prior != b.prior) return a.prior > b.prior;
      return a.entity < b.entity;
    });
    double sum = 0.0;
    for (const auto& c : cands) sum += c.prior;
    if (sum > 1.0 + 1e-9) {
      throw Error("gazetteer priors for surface '" + key + "' sum to " + std::to_string(sum) +
                  " (> 1)");
    }
  }
}

const std::vector<Candidate>* Gazetteer::find(std::string_view key) const {
  auto it = entries_.find(std::string(key));
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<std::string> Gazetteer::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  std::sort(out.begin(), out.end());
  return out;
}

Gazetteer load_gazetteer(const fs::path& path) {
  Gazetteer g;
  io::for_each_line(path, [&](std::string_view line, std::uint64_t n) {
    if (text::is_blank(line)) return;
    const auto bad = [&](const std::string& why) {
      return Error(path.string() + ":" + std::to_string(n) + ": " + why);
    };
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string_view::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string_view::npos || line.find('\t', t2 + 1) != std::string_view::npos) {
      throw bad("expected surface<TAB>entity_id<TAB>prior");
    }
    const auto surface = line.substr(0, t1);
    const auto entity = line.substr(t1 + 1, t2 - t1 - 1);
    const auto prior_text = line.substr(t2 + 1);
    if (entity.empty()) throw bad("empty entity id");
    if (!text::is_valid_utf8(line)) throw bad("invalid UTF-8");
    double prior = 0.0;
    auto [ptr, ec] = std::from_chars(prior_text.data(), prior_text.data() + prior_text.size(), prior);
    if (ec != std::errc() || ptr != prior_text.data() + prior_text.size()) {
      throw bad("unparsable prior '" + std::string(prior_text) + "'");
    }
    if (!(prior >= 0.0 && prior <= 1.0)) throw bad("prior outside [0,1]");
    g.add(surface, entity, prior);
  });
  g.finalize();
  return g;
}

std::vector<EntityMention> link_text(const Gazetteer& gazetteer, std::string_view text) {
  std::vector<EntityMention> out;
  if (gazetteer.empty() || text.empty()) return out;
  const auto spans = text::word_spans(text);
  std::vector<std::string> words;
  words.reserve(spans.size());
  for (const auto& sp : spans) words.push_back(text::casefold(sp.in(text)));

  std::string key;
  std::size_t i = 0;
  while (i < words.size()) {
    const std::size_t longest = std::min(gazetteer.max_tokens(), words.size() - i);
    std::size_t matched = 0;
    const std::vector<Candidate>* cands = nullptr;
    std::string matched_key;
    key.clear();
    for (std::size_t len = 1; len <= longest; ++len) {
      if (len > 1) key.push_back(' ');
      key += words[i + len - 1];
      if (const auto* c = gazetteer.find(key)) {
        matched = len;
        cands = c;
        matched_key = key;
      }
    }
    if (matched == 0) {
      ++i;
      continue;
    }
    out.push_back({cands->front().entity, {spans[i].begin, spans[i + matched - 1].end},
                   std::move(matched_key)});
    i += matched;
  }
  return out;
}

std::vector<EntityId> entity_set(const std::vector<EntityMention>& mentions) {
  std::vector<EntityId> ids;
  ids.reserve(mentions.size());
  for (const auto& m : mentions) ids.push_back(m.entity);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

void link_corpus(const Gazetteer& gazetteer, const CorpusManifest& manifest, unsigned workers,
                 const std::function<void(const LinkedDocument&)>& sink) {
  const std::size_t n_shards = manifest.shards().size();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n_shards)));
  const auto link_shard = [&](std::size_t s) {
    std::vector<LinkedDocument> docs;
    docs.reserve(manifest.shards()[s].document_count);
    for_each_document(manifest, s, [&](const Document& d, std::string_view) {
      docs.push_back({d.internal_id, entity_set(link_text(gazetteer, d.text))});
    });
    return docs;
  };
  if (workers == 1) {
    for (std::size_t s = 0; s < n_shards; ++s) {
      for (const auto& d : link_shard(s)) sink(d);
    }
    return;
  }

  // Workers claim shards in order; the caller drains finished shards in
  // order so at most `workers` shard results are buffered past the cursor.
  std::mutex mu;
  std::condition_variable cv;
  std::vector<std::optional<std::vector<LinkedDocument>>> results(n_shards);
  std::exception_ptr failure;
  std::size_t next_shard = 0;
  std::size_t drained = 0;
  const auto worker = [&] {
    for (;;) {
      std::size_t s = 0;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return next_shard < drained + workers || failure || next_shard >= n_shards; });
        if (failure || next_shard >= n_shards) return;
        s = next_shard++;
      }
      try {
        auto docs = link_shard(s);
        std::lock_guard lock(mu);
        results[s] = std::move(docs);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
      }
      cv.notify_all();
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (; drained < n_shards;) {
    std::vector<LinkedDocument> docs;
    {
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return results[drained].has_value() || failure; });
      if (failure) break;
      docs = std::move(*results[drained]);
      results[drained].reset();
    }
    try {
      for (const auto& d : docs) sink(d);
    } catch (...) {
      std::lock_guard lock(mu);
      failure = std::current_exception();
      cv.notify_all();
      break;
    }
    {
      std::lock_guard lock(mu);
      ++drained;
    }
    cv.notify_all();
  }
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

std::vector<LinkedDocument> link_corpus(const Gazetteer& gazetteer,
                                        const CorpusManifest& manifest, unsigned workers) {
  std::vector<LinkedDocument> out;
  out.reserve(manifest.total_documents());
  link_corpus(gazetteer, manifest, workers, [&](const LinkedDocument& d) { out.push_back(d); });
  return out;
}

void import_annotations(const fs::path& path, const CorpusManifest* manifest,
                        const std::function<void(const LinkedDocument&)>& sink) {
  io::for_each_json_line(path, [&](const Json& j, std::uint64_t n) {
    const auto bad = [&](const std::string& why) {
      return Error(path.string() + ":" + std::to_string(n) + ": " + why);
    };
    auto id = j.find("doc_id");
    if (id == j.end() || !id->is_number_unsigned()) throw bad("\"doc_id\" must be a non-negative integer");
    auto ents = j.find("entities");
    if (ents == j.end() || !ents->is_array()) throw bad("\"entities\" must be an array");
    LinkedDocument doc;
    doc.internal_id = id->get<DocId>();
    if (manifest != nullptr && doc.internal_id >= manifest->total_documents()) {
      throw bad("unknown doc_id " + std::to_string(doc.internal_id));
    }
    for (const auto& e : *ents) {
      if (!e.is_string() || e.get_ref<const std::string&>().empty()) {
        throw bad("entity ids must be non-empty strings");
      }
      doc.entities.push_back(e.get<std::string>());
    }
    std::sort(doc.entities.begin(), doc.entities.end());
    doc.entities.erase(std::unique(doc.entities.begin(), doc.entities.end()), doc.entities.end());
    sink(doc);
  });
}

std::vector<LinkedDocument> import_annotations(const fs::path& path,
                                               const CorpusManifest* manifest) {
  std::vector<LinkedDocument> out;
  import_annotations(path, manifest, [&](const LinkedDocument& d) { out.push_back(d); });
  return out;
}

std::string to_jsonl(const LinkedDocument& doc) {
  Json j;
  j["doc_id"] = doc.internal_id;
  j["entities"] = doc.entities;
  return j.dump();
}

}  // namespace ltk
