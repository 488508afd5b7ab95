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

#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <thread>
#include <unordered_map>

#include "ltk/cooc_index.hpp"
#include "ltk/corpus_io.hpp"
#include "ltk/counterfactual.hpp"
#include "ltk/entity_linker.hpp"
#include "ltk/error.hpp"
#include "ltk/eval_metrics.hpp"
#include "ltk/io.hpp"
#include "ltk/qa_linker.hpp"
#include "ltk/retrieval.hpp"
#include "ltk/stats_fit.hpp"

namespace ltk::cli {
namespace fs = std::filesystem;
using io::Json;

namespace {

// Defaults shared with the library.
constexpr std::uint64_t kDefaultMinSamples = 500;
constexpr std::uint64_t kDefaultSubpopMax = 5;
constexpr std::uint64_t kDefaultPerBin = 100;
constexpr std::size_t kDefaultAuditN = 300;
constexpr std::size_t kDefaultShots = 4;
constexpr std::size_t kDefaultTopK = 3;
constexpr std::size_t kDefaultHoldout = 16;

unsigned default_workers() {
  if (const char* env = std::getenv("LTK_WORKERS")) {
    try {
      const int n = std::stoi(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Minimal CSV reader: header row plus comma-separated rows, no quoting.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name, const fs::path& path) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto c = line.find(',', start);
    std::string cell(line.substr(start, c == std::string_view::npos ? c : c - start));
    const auto b = cell.find_first_not_of(" \t");
    const auto e = cell.find_last_not_of(" \t");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    if (c == std::string_view::npos) break;
    start = c + 1;
  }
  return out;
}

Csv read_csv(const fs::path& path) {
  Csv csv;
  io::for_each_line(path, [&](std::string_view line, std::uint64_t n) {
    if (text::is_blank(line)) return;
    auto cells = split_commas(line);
    if (csv.header.empty()) {
      csv.header = std::move(cells);
      return;
    }
    if (cells.size() != csv.header.size()) {
      throw Error(path.string() + ":" + std::to_string(n) + ": expected " +
                  std::to_string(csv.header.size()) + " columns");
    }
    csv.rows.push_back(std::move(cells));
  });
  if (csv.header.empty()) throw Error(path.string() + ": empty CSV");
  return csv;
}

double parse_double(const std::string& s, const fs::path& path) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw Error(path.string() + ": not a number: '" + s + "'");
  return v;
}

std::uint64_t parse_count(const std::string& s, const fs::path& path) {
  std::size_t used = 0;
  std::uint64_t v = 0;
  try {
    v = std::stoull(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty() || s[0] == '-') {
    throw Error(path.string() + ": not a count: '" + s + "'");
  }
  return v;
}

std::string id_of(const Json& j) {
  const auto& id = j.at("id");
  return id.is_string() ? id.get<std::string>() : id.dump();
}

// id -> count, in file order. Linked-QA tables contribute Linked rows only;
// any other jsonl must carry {"id", "count"}.
std::vector<std::pair<std::string, std::uint64_t>> load_counts(const fs::path& path) {
  std::vector<std::pair<std::string, std::uint64_t>> out;
  io::for_each_json_line(path, [&](const Json& j, std::uint64_t) {
    if (j.contains("status")) {
      const LinkedQA row = linked_qa_from_json(j);
      if (row.linked()) out.emplace_back(row.id, row.relevant_doc_count);
    } else {
      out.emplace_back(id_of(j), j.at("count").get<std::uint64_t>());
    }
  });
  if (out.empty()) throw Error(path.string() + " has no countable records");
  return out;
}

std::vector<ScalingPoint> load_points(const fs::path& path) {
  const Csv csv = read_csv(path);
  const auto pc = csv.column("params", path);
  const auto ac = csv.column("accuracy", path);
  std::vector<ScalingPoint> pts;
  for (const auto& r : csv.rows) pts.push_back({parse_double(r[pc], path), parse_double(r[ac], path)});
  return pts;
}

std::vector<std::size_t> parse_ks(const std::string& arg) {
  std::vector<std::size_t> ks;
  for (const auto& cell : split_commas(arg)) {
    std::size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != cell.size() || cell.empty() || v == 0) throw Error("bad k list '" + arg + "'");
    ks.push_back(v);
  }
  return ks;
}

DocRange parse_range(const std::string& arg) {
  const auto colon = arg.find(':');
  if (colon == std::string::npos) throw Error("range must look like BEGIN:END");
  try {
    return {std::stoull(arg.substr(0, colon)), std::stoull(arg.substr(colon + 1))};
  } catch (const std::exception&) {
    throw Error("range must look like BEGIN:END");
  }
}

std::vector<LinkedDocument> read_linked_sorted(const fs::path& path, const CorpusManifest* manifest) {
  auto docs = import_annotations(path, manifest);
  std::sort(docs.begin(), docs.end(),
            [](const LinkedDocument& a, const LinkedDocument& b) { return a.internal_id < b.internal_id; });
  for (std::size_t i = 1; i < docs.size(); ++i) {
    if (docs[i].internal_id == docs[i - 1].internal_id) {
      throw Error(path.string() + ": document " + std::to_string(docs[i].internal_id) +
                  " appears twice");
    }
  }
  return docs;
}

std::map<std::string, QAExample> qa_by_id(const std::vector<QAExample>& examples) {
  std::map<std::string, QAExample> out;
  for (const auto& ex : examples) out.emplace(ex.id, ex);
  return out;
}


struct Options {
  unsigned workers = 0;
  std::uint64_t seed = 0;

  // shared paths
  std::vector<std::string> inputs;
  std::string out, manifest, gazetteer, annotations, linked, index, qa, predictions, scores,
      counts, stats, holdout_out, labels, sample, out_corpus, out_manifest, out_idmap, passages,
      incontext, csv, linked_a, linked_b, points, meta;
  std::string format = "jsonl";
  std::string range;
  std::uint64_t documents = 0;
  std::size_t shards = 1;
  std::string entity;
  std::vector<std::string> pair, docs;
  std::size_t holdout = kDefaultHoldout;
  std::uint64_t min_samples = kDefaultMinSamples;
  std::string mode;
  std::uint64_t subpop_max = 0;
  std::size_t audit_n = kDefaultAuditN;
  double target = -1;
  double factor = 1.0;
  std::uint64_t n_per_bin = kDefaultPerBin;
  double k1 = 0.9;
  double b = 0.4;
  std::string question;
  std::size_t k = kDefaultTopK;
  std::string ks = "1,3,5,10,20";
  std::size_t shots = kDefaultShots;
  std::size_t top_k = kDefaultTopK;
};

class Runner {
 public:
  Runner(Options& o, std::ostream& out, std::ostream& err) : o_(o), out_(out), err_(err) {}

  void ingest() {
    std::vector<fs::path> paths(o_.inputs.begin(), o_.inputs.end());
    const auto m = ingest_corpus(paths, parse_corpus_format(o_.format));
    save_manifest(m, o_.out);
    err_ << "ingested " << m.total_documents() << " documents (" << m.skipped_records()
         << " skipped) from " << m.shards().size() << " shard(s)\n";
  }

  void link() {
    const auto m = load_manifest(o_.manifest);
    io::AtomicFile f(o_.out, true);
    std::uint64_t n = 0;
    const auto sink = [&](const LinkedDocument& d) {
      f.stream() << to_jsonl(d) << '\n';
      ++n;
    };
    if (!o_.annotations.empty()) {
      import_annotations(o_.annotations, &m, sink);
    } else if (!o_.gazetteer.empty()) {
      const auto g = load_gazetteer(o_.gazetteer);
      link_corpus(g, m, o_.workers, sink);
    } else {
      throw Error("link needs --gazetteer or --annotations");
    }
    f.commit();
    err_ << "wrote " << n << " linked documents\n";
  }

  void index_build() {
    std::uint64_t n_docs = o_.documents;
    std::optional<CorpusManifest> m;
    if (!o_.manifest.empty()) {
      m = load_manifest(o_.manifest);
      n_docs = m->total_documents();
    } else if (o_.range.empty() && o_.documents == 0) {
      throw Error("index build needs --manifest or --documents");
    }
    const auto docs = read_linked_sorted(o_.linked, m ? &*m : nullptr);
    if (!o_.range.empty()) {
      const DocRange r = parse_range(o_.range);
      std::vector<LinkedDocument> inside;
      for (const auto& d : docs) {
        if (r.contains(d.internal_id)) inside.push_back(d);
      }
      const auto shard = build_shard(inside, r);
      save_shard(shard, o_.out);
      err_ << "shard [" << r.begin << ", " << r.end << "): " << shard.table().entity_count()
           << " entities\n";
      return;
    }
    const auto idx = build_index(docs, n_docs, std::max<std::size_t>(o_.shards, 1), o_.workers);
    save_index(idx, o_.out);
    err_ << "index: " << idx.document_count() << " documents, " << idx.entity_count()
         << " entities, " << idx.table().posting_count() << " postings\n";
  }

  void index_merge() {
    std::vector<IndexShard> shards;
    for (const auto& p : o_.inputs) shards.push_back(load_shard(p));
    const auto idx = merge_shards(std::move(shards));
    save_index(idx, o_.out);
    err_ << "merged index: " << idx.document_count() << " documents, " << idx.entity_count()
         << " entities\n";
  }

  void index_query() {
    const auto idx = load_index(o_.index);
    if (!o_.entity.empty()) {
      out_ << idx.count_entity(o_.entity) << '\n';
    } else if (o_.pair.size() == 2) {
      out_ << idx.count_pair(o_.pair[0], o_.pair[1]) << '\n';
    } else if (o_.docs.size() == 2) {
      for (DocId d : idx.docs_for_pair(o_.docs[0], o_.docs[1])) out_ << d << '\n';
    } else {
      throw Error("index query needs --entity, --pair A B or --docs A B");
    }
  }

  void qa_link() {
    const auto g = load_gazetteer(o_.gazetteer);
    const auto idx = load_index(o_.index);
    auto split = split_holdout(load_qa_examples(o_.qa), o_.holdout);
    const auto table = link_qa_dataset(split.rest, g, idx, o_.workers);
    io::AtomicFile f(o_.out, true);
    for (const auto& r : table.rows) f.stream() << to_jsonl(r) << '\n';
    std::optional<io::AtomicFile> h;
    if (!o_.holdout_out.empty()) {
      h.emplace(o_.holdout_out, true);
      for (const auto& ex : split.holdout) h->stream() << to_jsonl(ex) << '\n';
    }
    std::optional<io::AtomicFile> s;
    if (!o_.stats.empty()) {
      s.emplace(o_.stats, true);
      s->stream() << stats_to_json(table.stats, split.holdout.size());
    }
    f.commit();
    if (h) h->commit();
    if (s) s->commit();
    err_ << "linked " << table.stats.linked << " of " << table.stats.total << " examples ("
         << split.holdout.size() << " held out)\n";
  }

  // id -> 0/1 EM score, for QA examples that have a prediction.
  std::vector<std::pair<std::string, double>> em_scores() {
    const auto preds = load_predictions(o_.predictions);
    const auto golds = qa_by_id(load_qa_examples(o_.qa));
    std::vector<std::pair<std::string, double>> out;
    std::uint64_t unknown = 0;
    for (const auto& p : preds) {
      auto it = golds.find(p.id);
      if (it == golds.end()) {
        ++unknown;
        continue;
      }
      out.emplace_back(p.id, exact_match(p.prediction, it->second.answers) ? 1.0 : 0.0);
    }
    if (unknown > 0) err_ << unknown << " prediction(s) have no matching QA example\n";
    return out;
  }

  void eval_em() {
    const auto scores = em_scores();
    io::AtomicFile f(o_.out, true);
    double sum = 0;
    for (const auto& [id, v] : scores) {
      Json j;
      j["id"] = id;
      j["value"] = v;
      f.stream() << j.dump() << '\n';
      sum += v;
    }
    f.commit();
    out_ << "EM " << fmt_double(scores.empty() ? 0.0 : sum / static_cast<double>(scores.size()))
         << " over " << scores.size() << " predictions\n";
  }

  void eval_bins() {
    std::vector<std::pair<std::string, double>> scores;
    if (!o_.scores.empty()) {
      io::for_each_json_line(o_.scores, [&](const Json& j, std::uint64_t) {
        const auto& v = j.contains("value") ? j.at("value") : j.at("correct");
        scores.emplace_back(id_of(j), v.is_boolean() ? (v.get<bool>() ? 1.0 : 0.0) : v.get<double>());
      });
      if (scores.empty()) throw Error("scores file " + o_.scores + " contains no records");
    } else if (!o_.predictions.empty() && !o_.qa.empty()) {
      scores = em_scores();
    } else {
      throw Error("eval bins needs --scores, or --predictions with --qa");
    }
    const auto counts = load_counts(!o_.linked.empty() ? o_.linked : o_.counts);
    std::unordered_map<std::string, double> by_id(scores.begin(), scores.end());
    std::vector<ScoredRecord> records;
    for (const auto& [id, c] : counts) {
      auto it = by_id.find(id);
      if (it != by_id.end()) records.push_back({c, it->second});
    }
    if (records.empty()) throw Error("no records joined between counts and scores");
    err_ << "binned " << records.size() << " records (" << counts.size() - records.size()
         << " counted records without a score)\n";
    io::write_file_atomic(o_.out, curve_to_csv(accuracy_by_bin(records, BinScheme{o_.min_samples})));
  }

  void eval_loo() {
    const auto scored = human_loo_accuracy(load_annotations(o_.annotations));
    std::string body;
    for (const auto& s : scored) {
      Json j;
      j["id"] = s.id;
      j["value"] = s.value;
      body += j.dump() + "\n";
    }
    io::write_file_atomic(o_.out, body);
  }

  void eval_heuristics() {
    const auto rows = load_linked_qa(o_.linked);
    const auto idx = load_index(o_.index);
    auto counts = heuristic_counts(rows, idx, parse_heuristic_mode(o_.mode));
    if (o_.subpop_max > 0) counts = subpopulation_filter(counts, o_.subpop_max);
    std::string body;
    for (const auto& h : counts) {
      Json j;
      j["id"] = h.id;
      j["count"] = h.count;
      j["pair_count"] = h.pair_count;
      body += j.dump() + "\n";
    }
    io::write_file_atomic(o_.out, body);
  }

  void eval_audit_sample() {
    const auto rows = load_linked_qa(o_.linked);
    const auto idx = load_index(o_.index);
    const auto items = audit_sample(rows, idx, o_.audit_n, o_.seed);
    std::optional<CorpusManifest> m;
    if (!o_.manifest.empty()) m = load_manifest(o_.manifest);
    std::map<std::string, QAExample> qa;
    if (!o_.qa.empty()) qa = qa_by_id(load_qa_examples(o_.qa));
    std::map<std::string, const LinkedQA*> by_id;
    for (const auto& r : rows) by_id[r.id] = &r;
    std::string body;
    for (const auto& it : items) {
      Json j;
      j["qa_id"] = it.qa_id;
      j["doc_id"] = it.doc_id;
      j["question_entity"] = by_id[it.qa_id]->question_entity;
      j["answer_entity"] = by_id[it.qa_id]->answer_entity;
      if (auto q = qa.find(it.qa_id); q != qa.end()) {
        j["question"] = q->second.question;
        j["answers"] = q->second.answers;
      }
      if (m) j["text"] = get_document(*m, it.doc_id).text;
      j["label"] = nullptr;
      body += j.dump() + "\n";
    }
    io::write_file_atomic(o_.out, body);
  }

  void eval_audit_precision() {
    std::vector<AuditLabel> labels;
    io::for_each_json_line(o_.labels, [&](const Json& j, std::uint64_t) {
      labels.push_back(parse_audit_label(j.at("label").get<std::string>()));
    });
    const auto p = audit_precision(labels);
    Json j;
    j["n"] = p.total;
    j["full"] = p.full;
    j["partial"] = p.partial;
    j["none"] = p.none;
    j["precision"] = p.precision();
    const std::string body = j.dump(2) + "\n";
    if (!o_.out.empty()) io::write_file_atomic(o_.out, body);
    out_ << body;
  }

  void stats_spearman() {
    std::vector<double> x;
    std::vector<double> y;
    if (!o_.csv.empty()) {
      const Csv csv = read_csv(o_.csv);
      const auto xc = csv.column("x", o_.csv);
      const auto yc = csv.column("y", o_.csv);
      for (const auto& r : csv.rows) {
        x.push_back(parse_double(r[xc], o_.csv));
        y.push_back(parse_double(r[yc], o_.csv));
      }
    } else if (!o_.linked_a.empty() && !o_.linked_b.empty()) {
      const auto a = load_counts(o_.linked_a);
      const auto b = load_counts(o_.linked_b);
      std::unordered_map<std::string, std::uint64_t> bm(b.begin(), b.end());
      for (const auto& [id, c] : a) {
        if (auto it = bm.find(id); it != bm.end()) {
          x.push_back(static_cast<double>(c));
          y.push_back(static_cast<double>(it->second));
        }
      }
    } else {
      throw Error("stats spearman needs --csv or --linked-a with --linked-b");
    }
    const double rho = spearman_rho(std::span<const double>(x), std::span<const double>(y));
    Json j;
    j["rho"] = rho;
    j["n"] = x.size();
    const std::string body = j.dump(2) + "\n";
    if (!o_.out.empty()) io::write_file_atomic(o_.out, body);
    out_ << body;
  }

  void stats_scaling_fit() {
    const auto pts = load_points(o_.points);
    const auto fit = fit_log_linear(pts);
    const std::string body = fit_to_json(fit, o_.target > 0 ? &o_.target : nullptr);
    if (!o_.out.empty()) io::write_file_atomic(o_.out, body);
    out_ << body;
  }

  void stats_scale_counts() {
    std::vector<std::string> ids;
    std::vector<std::uint64_t> counts;
    if (!o_.csv.empty()) {
      const Csv csv = read_csv(o_.csv);
      const auto ic = csv.column("id", o_.csv);
      const auto cc = csv.column("count", o_.csv);
      for (const auto& r : csv.rows) {
        ids.push_back(r[ic]);
        counts.push_back(parse_count(r[cc], o_.csv));
      }
    } else if (!o_.linked.empty()) {
      for (auto& [id, c] : load_counts(o_.linked)) {
        ids.push_back(id);
        counts.push_back(c);
      }
    } else {
      throw Error("stats scale-counts needs --csv or --linked");
    }
    const auto scaled = scale_counts(counts, o_.factor);
    std::string body = "id,count\n";
    for (std::size_t i = 0; i < ids.size(); ++i) body += ids[i] + "," + std::to_string(scaled[i]) + "\n";
    io::write_file_atomic(o_.out, body);
  }

  void cf_sample() {
    const auto rows = load_linked_qa(o_.linked);
    const auto s = sample_per_bin(rows, o_.n_per_bin, o_.seed);
    io::write_file_atomic(o_.out, sample_to_json(s));
    std::uint64_t n = 0;
    for (const auto& b : s.bins) n += b.questions.size();
    err_ << "sampled " << n << " questions across " << s.bins.size() << " bins\n";
  }

  void cf_filter() {
    const auto m = load_manifest(o_.manifest);
    const auto idx = load_index(o_.index);
    if (idx.document_count() != m.total_documents()) {
      throw Error("index covers " + std::to_string(idx.document_count()) +
                  " documents but the manifest has " + std::to_string(m.total_documents()));
    }
    const auto s = sample_from_json(io::read_file(o_.sample));
    const auto removal = removal_set(s, idx);
    const auto r = filter_corpus(m, removal, {o_.out_corpus, o_.out_manifest, o_.out_idmap}, &s);
    err_ << "removed " << r.removed_documents << " of " << r.original_documents << " documents ("
         << fmt_double(r.removed_fraction) << ")\n";
  }

  void retrieval_segment() {
    const auto m = load_manifest(o_.manifest);
    io::AtomicFile f(o_.out, true);
    PassageId next = 0;
    for_each_document(m, [&](const Document& d, std::string_view) {
      for (const auto& p : segment_passages(d.text, d.internal_id, next)) {
        f.stream() << to_jsonl(p) << '\n';
        ++next;
      }
    });
    f.commit();
    err_ << "wrote " << next << " passages\n";
  }

  void retrieval_build() {
    Bm25Index idx(load_passages(o_.passages), Bm25Params{o_.k1, o_.b});
    save_bm25(idx, o_.out);
    err_ << "BM25 index over " << idx.passage_count() << " passages\n";
  }

  void retrieval_query() {
    const auto idx = load_bm25(o_.index);
    std::string body;
    std::size_t rank = 0;
    for (const auto& h : idx.query_topk(o_.question, o_.k)) {
      Json j;
      j["rank"] = ++rank;
      j["passage_id"] = h.passage->id;
      j["doc_id"] = h.passage->doc_id;
      j["score"] = h.score;
      j["text"] = h.passage->text;
      body += j.dump() + "\n";
    }
    if (!o_.out.empty()) {
      io::write_file_atomic(o_.out, body);
    } else {
      out_ << body;
    }
  }

  void retrieval_recall() {
    const auto idx = load_bm25(o_.index);
    const auto rows = load_linked_qa(o_.linked);
    const auto qa = qa_by_id(load_qa_examples(o_.qa));
    std::vector<RecallQuery> queries;
    for (const auto& r : rows) {
      if (!r.linked()) continue;
      auto it = qa.find(r.id);
      if (it == qa.end()) throw Error("linked QA '" + r.id + "' missing from " + o_.qa);
      queries.push_back({r.id, r.relevant_doc_count, it->second.question, it->second.answers});
    }
    if (queries.empty()) throw Error(o_.linked + " has no linked records");
    const auto curves = recall_curve(queries, idx, parse_ks(o_.ks), BinScheme{o_.min_samples});
    Json meta;
    meta["recall_definition"] = "answer_containment";
    meta["containment"] = "normalized answer alias as a contiguous token run of a retrieved passage";
    meta["k1"] = idx.params().k1;
    meta["b"] = idx.params().b;
    meta["questions"] = queries.size();
    io::AtomicFile csv(o_.out, true);
    csv.stream() << recall_to_csv(curves);
    io::AtomicFile mf(o_.meta.empty() ? o_.out + ".meta.json" : o_.meta, true);
    mf.stream() << meta.dump(2) << '\n';
    csv.commit();
    mf.commit();
  }

  void retrieval_prompts() {
    const PromptMode mode = parse_prompt_mode(o_.mode.empty() ? "closed_book" : o_.mode);
    const auto tests = load_qa_examples(o_.qa);
    const auto pool = load_qa_examples(o_.incontext);
    std::optional<Bm25Index> bm25;
    if (mode == PromptMode::kBm25) {
      if (o_.index.empty()) throw Error("bm25 prompts need --index");
      bm25 = load_bm25(o_.index);
    }
    const auto retrieve = [&](const std::string& q) {
      std::vector<std::string> out;
      for (const auto& h : bm25->query_topk(q, o_.top_k)) out.push_back(h.passage->text);
      return out;
    };
    const auto gold_context = [&](const QAExample& ex) {
      if (ex.context.empty()) throw Error("QA '" + ex.id + "' has no \"context\" for oracle prompts");
      for (const auto& a : ex.answers) {
        try {
          return oracle_context(ex.context, a);
        } catch (const Error&) {
        }
      }
      throw Error("QA '" + ex.id + "': no answer alias occurs in its gold context");
    };

    // Shots in pool order; in bm25 mode examples whose retrieval misses the
    // answer are swapped for the next candidate.
    std::vector<PromptExample> shots;
    for (const auto& ex : pool) {
      if (shots.size() == o_.shots) break;
      PromptExample pe{ex.question, ex.answers.front(), {}};
      if (mode == PromptMode::kBm25) {
        pe.passages = retrieve(ex.question);
        const bool ok = std::any_of(pe.passages.begin(), pe.passages.end(), [&](const std::string& p) {
          return contains_answer(p, {pe.answer});
        });
        if (!ok) continue;
      } else if (mode == PromptMode::kOracle) {
        pe.passages = {gold_context(ex)};
      }
      shots.push_back(std::move(pe));
    }
    if (shots.size() < o_.shots) {
      throw Error("only " + std::to_string(shots.size()) + " usable in-context examples in " +
                  o_.incontext + ", need " + std::to_string(o_.shots));
    }
    io::AtomicFile f(o_.out, true);
    for (const auto& ex : tests) {
      PromptExample t{ex.question, "", {}};
      if (mode == PromptMode::kBm25) t.passages = retrieve(ex.question);
      if (mode == PromptMode::kOracle) t.passages = {gold_context(ex)};
      Json j;
      j["id"] = ex.id;
      j["prompt"] = build_prompt(shots, t, mode, o_.shots);
      f.stream() << j.dump() << '\n';
    }
    f.commit();
  }

 private:
  Options& o_;
  std::ostream& out_;
  std::ostream& err_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  o.workers = default_workers();
  Runner runner(o, out, err);
  std::function<void()> action;

  CLI::App app{"ltk: relevant-document counting, QA evaluation and retrieval toolkit", "ltk"};
  app.require_subcommand(1);
  app.add_option("--workers", o.workers, "Worker threads (default: $LTK_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);

  const auto existing = [](CLI::Option* opt) { return opt->check(CLI::ExistingPath); };
  const auto bind = [&](CLI::App* cmd, void (Runner::*fn)()) {
    cmd->callback([&action, &runner, fn] { action = [&runner, fn] { (runner.*fn)(); }; });
  };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Ingest corpus shards into a manifest");
  ingest->add_option("--format", o.format, "jsonl or textdir")->check(CLI::IsMember({"jsonl", "textdir"}));
  ingest->add_option("--out", o.out, "Manifest JSON path")->required();
  existing(ingest->add_option("paths", o.inputs, "Shard files (jsonl) or directories (textdir)")->required());
  bind(ingest, &Runner::ingest);

  // link
  auto* link = app.add_subcommand("link", "Entity-link a corpus or import external annotations");
  existing(link->add_option("--manifest", o.manifest, "Corpus manifest")->required());
  auto* gaz_opt = existing(link->add_option("--gazetteer", o.gazetteer, "Gazetteer TSV"));
  existing(link->add_option("--annotations", o.annotations, "Annotation jsonl to import"))->excludes(gaz_opt);
  link->add_option("--out", o.out, "Linked documents jsonl")->required();
  bind(link, &Runner::link);

  // index
  auto* index = app.add_subcommand("index", "Build, merge and query the entity index");
  index->require_subcommand(1);
  auto* ib = index->add_subcommand("build", "Build an index (or one shard with --range)");
  existing(ib->add_option("--linked", o.linked, "Linked documents jsonl")->required());
  existing(ib->add_option("--manifest", o.manifest, "Corpus manifest (sets the document count)"));
  ib->add_option("--documents", o.documents, "Corpus document count when no manifest is given");
  ib->add_option("--shards", o.shards, "Parallel build shards")->check(CLI::PositiveNumber);
  ib->add_option("--range", o.range, "Build one shard file for BEGIN:END");
  ib->add_option("--out", o.out, "Output index (or shard) file")->required();
  bind(ib, &Runner::index_build);
  auto* im = index->add_subcommand("merge", "Merge shard files into one index");
  existing(im->add_option("shards", o.inputs, "Shard files")->required());
  im->add_option("--out", o.out, "Output index file")->required();
  bind(im, &Runner::index_merge);
  auto* iq = index->add_subcommand("query", "Count entity occurrences and co-occurrences");
  existing(iq->add_option("--index", o.index, "Index file")->required());
  auto* qe = iq->add_option("--entity", o.entity, "Count documents containing an entity");
  auto* qp = iq->add_option("--pair", o.pair, "Count documents containing both entities")->expected(2);
  auto* qd = iq->add_option("--docs", o.docs, "List documents containing both entities")->expected(2);
  qe->excludes(qp)->excludes(qd);
  qp->excludes(qd);
  bind(iq, &Runner::index_query);

  // qa-link
  auto* qa = app.add_subcommand("qa-link", "Resolve QA examples to salient entities and counts");
  existing(qa->add_option("--qa", o.qa, "QA jsonl")->required());
  existing(qa->add_option("--gazetteer", o.gazetteer, "Gazetteer TSV")->required());
  existing(qa->add_option("--index", o.index, "Entity index")->required());
  qa->add_option("--out", o.out, "Linked QA jsonl")->required();
  qa->add_option("--stats", o.stats, "Discard statistics JSON");
  qa->add_option("--holdout", o.holdout, "Leading examples held out for few-shot prompts")
      ->capture_default_str();
  qa->add_option("--holdout-out", o.holdout_out, "Where to write the held-out examples");
  bind(qa, &Runner::qa_link);

  // eval
  auto* ev = app.add_subcommand("eval", "Exact match, binned curves, human accuracy, audits");
  ev->require_subcommand(1);
  auto* em = ev->add_subcommand("em", "Score predictions by exact match");
  existing(em->add_option("--qa", o.qa, "QA jsonl with gold answers")->required());
  existing(em->add_option("--predictions", o.predictions, "Predictions jsonl")->required());
  em->add_option("--out", o.out, "Per-example scores jsonl")->required();
  bind(em, &Runner::eval_em);
  auto* eb = ev->add_subcommand("bins", "Log-binned accuracy versus relevant document count");
  auto* ebl = existing(eb->add_option("--linked", o.linked, "Linked QA jsonl (counts)"));
  existing(eb->add_option("--counts", o.counts, "Heuristic counts jsonl"))->excludes(ebl);
  existing(eb->add_option("--predictions", o.predictions, "Predictions jsonl"));
  existing(eb->add_option("--qa", o.qa, "QA jsonl with gold answers"));
  existing(eb->add_option("--scores", o.scores, "Pre-computed scores jsonl {id, value}"));
  eb->add_option("--min-samples", o.min_samples, "Bins with fewer samples are flagged trimmed")
      ->capture_default_str()->check(CLI::PositiveNumber);
  eb->add_option("--out", o.out, "Curve CSV")->required();
  eb->callback([&] {
    if (o.linked.empty() && o.counts.empty()) throw CLI::ValidationError("--linked or --counts is required");
    action = [&] { runner.eval_bins(); };
  });
  auto* el = ev->add_subcommand("loo", "Human leave-one-annotator-out accuracy");
  existing(el->add_option("--annotations", o.annotations, "Annotations jsonl")->required());
  el->add_option("--out", o.out, "Per-example accuracy jsonl")->required();
  bind(el, &Runner::eval_loo);
  auto* eh = ev->add_subcommand("heuristics", "Baseline counts: pair, question_only, answer_only");
  existing(eh->add_option("--linked", o.linked, "Linked QA jsonl")->required());
  existing(eh->add_option("--index", o.index, "Entity index")->required());
  eh->add_option("--mode", o.mode, "pair, question_only or answer_only")->required()
      ->check(CLI::IsMember({"pair", "question_only", "answer_only"}));
  eh->add_option("--subpop-max", o.subpop_max,
                 "Keep only pairs co-occurring fewer times than this");
  eh->add_option("--out", o.out, "Counts jsonl")->required();
  bind(eh, &Runner::eval_heuristics);
  auto* ea = ev->add_subcommand("audit-sample", "Sample QA pairs and one relevant document each");
  existing(ea->add_option("--linked", o.linked, "Linked QA jsonl")->required());
  existing(ea->add_option("--index", o.index, "Entity index")->required());
  existing(ea->add_option("--manifest", o.manifest, "Corpus manifest (adds document text)"));
  existing(ea->add_option("--qa", o.qa, "QA jsonl (adds question and answers)"));
  ea->add_option("--n", o.audit_n, "QA pairs to sample")->capture_default_str();
  ea->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  ea->add_option("--out", o.out, "Audit sheet jsonl")->required();
  bind(ea, &Runner::eval_audit_sample);
  auto* ep = ev->add_subcommand("audit-precision", "Aggregate full/partial/none audit labels");
  existing(ep->add_option("--labels", o.labels, "Labels jsonl with a \"label\" field")->required());
  ep->add_option("--out", o.out, "Precision JSON");
  bind(ep, &Runner::eval_audit_precision);

  // stats
  auto* st = app.add_subcommand("stats", "Rank correlation, scaling fits, count rescaling");
  st->require_subcommand(1);
  auto* ss = st->add_subcommand("spearman", "Spearman rank correlation");
  auto* ssc = existing(ss->add_option("--csv", o.csv, "CSV with columns x,y"));
  existing(ss->add_option("--linked-a", o.linked_a, "Linked QA or counts jsonl, first corpus"))->excludes(ssc);
  existing(ss->add_option("--linked-b", o.linked_b, "Linked QA or counts jsonl, second corpus"))->excludes(ssc);
  ss->add_option("--out", o.out, "Result JSON");
  bind(ss, &Runner::stats_spearman);
  auto* sf = st->add_subcommand("scaling-fit", "Fit accuracy against log10(parameters)");
  existing(sf->add_option("--points", o.points, "CSV with columns params,accuracy")->required());
  sf->add_option("--target", o.target, "Extrapolate the size reaching this accuracy");
  sf->add_option("--out", o.out, "Fit report JSON");
  bind(sf, &Runner::stats_scaling_fit);
  auto* sc = st->add_subcommand("scale-counts", "Rescale counts to simulate a larger corpus");
  auto* scc = existing(sc->add_option("--csv", o.csv, "CSV with columns id,count"));
  existing(sc->add_option("--linked", o.linked, "Linked QA or counts jsonl"))->excludes(scc);
  sc->add_option("--factor", o.factor, "Multiplier (> 0)")->required();
  sc->add_option("--out", o.out, "Scaled CSV id,count")->required();
  bind(sc, &Runner::stats_scale_counts);

  // counterfactual
  auto* cf = app.add_subcommand("counterfactual", "Build a corpus without sampled questions' documents");
  cf->require_subcommand(1);
  auto* cs = cf->add_subcommand("sample", "Sample questions per log10 count bin");
  existing(cs->add_option("--linked", o.linked, "Linked QA jsonl")->required());
  cs->add_option("--n-per-bin", o.n_per_bin, "Questions per bin")->capture_default_str();
  cs->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  cs->add_option("--out", o.out, "Sample JSON")->required();
  bind(cs, &Runner::cf_sample);
  auto* cflt = cf->add_subcommand("filter", "Write the filtered corpus");
  existing(cflt->add_option("--manifest", o.manifest, "Corpus manifest")->required());
  existing(cflt->add_option("--index", o.index, "Entity index over the corpus")->required());
  existing(cflt->add_option("--sample", o.sample, "Sample JSON from 'counterfactual sample'")->required());
  cflt->add_option("--out-corpus", o.out_corpus, "Filtered corpus jsonl")->required();
  cflt->add_option("--out-manifest", o.out_manifest, "Removal manifest JSON")->required();
  cflt->add_option("--out-idmap", o.out_idmap, "old_id,new_id CSV")->required();
  bind(cflt, &Runner::cf_filter);

  // retrieval
  auto* rt = app.add_subcommand("retrieval", "BM25 retrieval, recall curves and prompts");
  rt->require_subcommand(1);
  auto* rs = rt->add_subcommand("segment", "Split documents into passages");
  existing(rs->add_option("--manifest", o.manifest, "Knowledge corpus manifest")->required());
  rs->add_option("--out", o.out, "Passages jsonl")->required();
  bind(rs, &Runner::retrieval_segment);
  auto* rb = rt->add_subcommand("build", "Build a BM25 index");
  existing(rb->add_option("--passages", o.passages, "Passages jsonl")->required());
  rb->add_option("--k1", o.k1, "BM25 k1")->capture_default_str();
  rb->add_option("--b", o.b, "BM25 b")->capture_default_str();
  rb->add_option("--out", o.out, "BM25 index file")->required();
  bind(rb, &Runner::retrieval_build);
  auto* rq = rt->add_subcommand("query", "Top-k passages for a question");
  existing(rq->add_option("--index", o.index, "BM25 index file")->required());
  rq->add_option("--question", o.question, "Query text")->required();
  rq->add_option("--k", o.k, "Passages to return")->capture_default_str()->check(CLI::PositiveNumber);
  rq->add_option("--out", o.out, "Write results here instead of stdout");
  bind(rq, &Runner::retrieval_query);
  auto* rr = rt->add_subcommand("recall", "Top-k answer recall by relevant document count");
  existing(rr->add_option("--index", o.index, "BM25 index file")->required());
  existing(rr->add_option("--linked", o.linked, "Linked QA jsonl")->required());
  existing(rr->add_option("--qa", o.qa, "QA jsonl with questions and answers")->required());
  rr->add_option("--ks", o.ks, "Comma-separated k values")->capture_default_str();
  rr->add_option("--min-samples", o.min_samples, "Bins with fewer samples are flagged trimmed")
      ->capture_default_str()->check(CLI::PositiveNumber);
  rr->add_option("--out", o.out, "Recall CSV")->required();
  rr->add_option("--meta", o.meta, "Metadata JSON (default: <out>.meta.json)");
  bind(rr, &Runner::retrieval_recall);
  auto* rp = rt->add_subcommand("prompts", "Build few-shot prompts");
  existing(rp->add_option("--qa", o.qa, "Test questions jsonl")->required());
  existing(rp->add_option("--incontext", o.incontext, "In-context example pool jsonl")->required());
  rp->add_option("--mode", o.mode, "closed_book, bm25 or oracle")
      ->check(CLI::IsMember({"closed_book", "bm25", "oracle"}));
  existing(rp->add_option("--index", o.index, "BM25 index (bm25 mode)"));
  rp->add_option("--shots", o.shots, "In-context examples")->capture_default_str();
  rp->add_option("--top-k", o.top_k, "Passages per question (bm25 mode)")
      ->capture_default_str()->check(CLI::PositiveNumber);
  rp->add_option("--out", o.out, "Prompts jsonl")->required();
  bind(rp, &Runner::retrieval_prompts);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (action) action();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ltk::cli
