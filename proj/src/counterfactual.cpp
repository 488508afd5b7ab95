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

#include "ltk/counterfactual.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "ltk/error.hpp"
#include "ltk/eval_metrics.hpp"
#include "ltk/io.hpp"
#include "ltk/rng.hpp"

namespace ltk {
namespace fs = std::filesystem;
using io::Json;

CounterfactualSample sample_per_bin(const std::vector<LinkedQA>& rows, std::uint64_t n_per_bin,
                                    std::uint64_t seed) {
  std::map<int, std::vector<const LinkedQA*>> bins;
  for (const auto& r : rows) {
    if (r.linked()) bins[bin_exponent(r.relevant_doc_count)].push_back(&r);
  }
  if (bins.empty()) throw Error("no linked QA records to sample from");
  CounterfactualSample out;
  out.seed = seed;
  out.n_per_bin = n_per_bin;
  Rng rng(seed);
  for (const auto& [e, members] : bins) {
    auto picks = rng.sample_indices(members.size(), n_per_bin);
    std::sort(picks.begin(), picks.end());
    BinSample b;
    b.exponent = e;
    b.available = members.size();
    for (auto i : picks) {
      const LinkedQA& r = *members[i];
      b.questions.push_back({r.id, r.question_entity, r.answer_entity, r.relevant_doc_count});
    }
    out.bins.push_back(std::move(b));
  }
  return out;
}

PostingList removal_set(const CounterfactualSample& sample, const EntityIndex& index) {
  PostingList all;
  for (const auto& b : sample.bins) {
    for (const auto& q : b.questions) {
      const auto docs = index.docs_for_pair(q.question_entity, q.answer_entity);
      all.insert(all.end(), docs.begin(), docs.end());
    }
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

RemovalManifest filter_corpus(const CorpusManifest& manifest, const PostingList& removal,
                              const FilterOutputs& outputs, const CounterfactualSample* sample) {
  for (std::size_t i = 0; i < removal.size(); ++i) {
    if (removal[i] >= manifest.total_documents()) {
      throw Error("removal id " + std::to_string(removal[i]) + " out of range (corpus has " +
                  std::to_string(manifest.total_documents()) + " documents)");
    }
    if (i > 0 && removal[i] <= removal[i - 1]) throw Error("removal ids must be sorted and unique");
  }

  io::AtomicFile corpus(outputs.corpus, true);
  std::optional<io::AtomicFile> id_map;
  if (!outputs.id_map.empty()) {
    id_map.emplace(outputs.id_map, true);
    id_map->stream() << "old_id,new_id\n";
  }
  std::size_t r = 0;
  DocId next_id = 0;
  for_each_document(manifest, [&](const Document& doc, std::string_view raw) {
    if (r < removal.size() && removal[r] == doc.internal_id) {
      ++r;
      return;
    }
    if (manifest.format() == CorpusFormat::kJsonl) {
      corpus.stream() << raw << '\n';
    } else {
      Json j;
      if (doc.external_id) j["id"] = *doc.external_id;
      j["text"] = doc.text;
      corpus.stream() << j.dump() << '\n';
    }
    if (id_map) id_map->stream() << doc.internal_id << ',' << next_id << '\n';
    ++next_id;
  });

  RemovalManifest m;
  m.seed = sample != nullptr ? sample->seed : 0;
  m.original_documents = manifest.total_documents();
  m.removed_documents = removal.size();
  m.kept_documents = next_id;
  m.removed_fraction = m.original_documents == 0
                           ? 0.0
                           : static_cast<double>(m.removed_documents) /
                                 static_cast<double>(m.original_documents);
  if (m.kept_documents + m.removed_documents != m.original_documents) {
    throw Error("filtered corpus does not conserve document count");
  }
  std::optional<io::AtomicFile> manifest_out;
  if (!outputs.manifest.empty()) {
    manifest_out.emplace(outputs.manifest, true);
    manifest_out->stream() << removal_manifest_to_json(m, sample);
  }
  corpus.commit();
  if (id_map) id_map->commit();
  if (manifest_out) manifest_out->commit();
  return m;
}

std::string sample_to_json(const CounterfactualSample& sample) {
  Json j;
  j["seed"] = sample.seed;
  j["n_per_bin"] = sample.n_per_bin;
  Json bins = Json::array();
  for (const auto& b : sample.bins) {
    Json qs = Json::array();
    for (const auto& q : b.questions) {
      qs.push_back({{"id", q.id},
                    {"question_entity", q.question_entity},
                    {"answer_entity", q.answer_entity},
                    {"relevant_doc_count", q.relevant_doc_count}});
    }
    bins.push_back({{"exponent", b.exponent},
                    {"bin_lo", "1" + std::string(static_cast<std::size_t>(b.exponent), '0')},
                    {"available", b.available},
                    {"questions", std::move(qs)}});
  }
  j["bins"] = std::move(bins);
  return j.dump(2) + "\n";
}

CounterfactualSample sample_from_json(std::string_view json) {
  Json j = Json::parse(json, nullptr, false);
  if (j.is_discarded()) throw Error("malformed counterfactual sample JSON");
  try {
    CounterfactualSample s;
    s.seed = j.at("seed").get<std::uint64_t>();
    s.n_per_bin = j.at("n_per_bin").get<std::uint64_t>();
    for (const auto& b : j.at("bins")) {
      BinSample bs;
      bs.exponent = b.at("exponent").get<int>();
      bs.available = b.at("available").get<std::uint64_t>();
      for (const auto& q : b.at("questions")) {
        bs.questions.push_back({q.at("id").get<std::string>(), q.at("question_entity").get<std::string>(),
                                q.at("answer_entity").get<std::string>(),
                                q.at("relevant_doc_count").get<std::uint64_t>()});
      }
      s.bins.push_back(std::move(bs));
    }
    return s;
  } catch (const Json::exception& e) {
    throw Error(std::string("malformed counterfactual sample JSON: ") + e.what());
  }
}

std::string removal_manifest_to_json(const RemovalManifest& m, const CounterfactualSample* sample) {
  Json j;
  j["seed"] = m.seed;
  j["original_documents"] = m.original_documents;
  j["removed_documents"] = m.removed_documents;
  j["kept_documents"] = m.kept_documents;
  j["removed_fraction"] = m.removed_fraction;
  if (sample != nullptr) {
    Json bins = Json::array();
    for (const auto& b : sample->bins) {
      Json ids = Json::array();
      for (const auto& q : b.questions) ids.push_back(q.id);
      bins.push_back({{"exponent", b.exponent}, {"qa_ids", std::move(ids)}});
    }
    j["sampled"] = std::move(bins);
  }
  return j.dump(2) + "\n";
}

}  // namespace ltk
