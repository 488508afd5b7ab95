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

// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>

#include "cli_scenario.hpp"
#include "fixtures.hpp"
#include "ltk/corpus_io.hpp"
#include "ltk/counterfactual.hpp"
#include "ltk/eval_metrics.hpp"
#include "ltk/io.hpp"
#include "ltk/qa_linker.hpp"
#include "ltk/retrieval.hpp"
#include "ltk/stats_fit.hpp"

using namespace ltk;
using namespace ltk::testing;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// A criterion body returns "" on success or the reason it failed.
struct Criterion {
  std::string name;
  std::function<std::string(std::string& detail)> body;
};

std::string index_oracle(std::string& detail) {
  const auto t0 = Clock::now();
  Rng rng(20240611);
  TempDir dir;
  for (int round = 0; round < 200; ++round) {
    const auto c = random_corpus(rng, 1000, 200);
    const auto parts = random_partition(rng, c.document_count, 1 + rng.below(8));
    std::vector<IndexShard> shards;
    for (const auto& r : parts) shards.push_back(build_shard(docs_in(c, r), r));
    const auto idx = merge_shards(std::move(shards));
    if (auto bad = check_against_oracle(idx, c); !bad.empty()) {
      return "corpus " + std::to_string(round) + ": " + bad;
    }
    save_index(idx, dir / "index.bin");
    const auto loaded = load_index(dir / "index.bin");
    if (!(loaded == idx)) return "corpus " + std::to_string(round) + ": save/load changed the index";
    if (auto bad = check_against_oracle(loaded, c); !bad.empty()) {
      return "corpus " + std::to_string(round) + " after reload: " + bad;
    }
  }
  const double s = seconds_since(t0);
  detail = "200 corpora, " + std::to_string(s).substr(0, 5) + " s";
  return s < 120.0 ? "" : "runtime " + std::to_string(s) + " s exceeds 120 s";
}

std::string merge_determinism(std::string& detail) {
  Rng rng(77);
  for (int round = 0; round < 50; ++round) {
    const auto c = random_corpus(rng, 1000, 200);
    const auto parts = random_partition(rng, c.document_count, 1 + rng.below(8));
    std::vector<IndexShard> shards;
    for (const auto& r : parts) shards.push_back(build_shard(docs_in(c, r), r));
    const std::string want = serialize(merge_shards(shards));
    for (int perm = 0; perm < 5; ++perm) {
      std::shuffle(shards.begin(), shards.end(), rng.engine());
      if (serialize(merge_shards(shards)) != want) return "corpus " + std::to_string(round) + " differs";
    }
    if (serialize(build_index(c.docs, c.document_count, 1)) != want) {
      return "corpus " + std::to_string(round) + ": single-shard build differs";
    }
  }
  detail = "50 corpora x 5 shuffled merge orders";
  return "";
}

std::string qa_linking(std::string& detail) {
  Rng rng(31);
  std::uint64_t checked = 0;
  std::uint64_t linked = 0;
  for (int fixture = 0; fixture < 100; ++fixture) {
    const auto f = random_qa_fixture(rng, 40);
    for (const auto& ex : f.examples) {
      const auto got = link_qa_example(ex, f.gazetteer, f.index);
      const auto want = oracle_link_qa(f, ex);
      if (!same_link(got, want)) return "fixture " + std::to_string(fixture) + " example " + ex.id;
      ++checked;
      linked += got.linked();
    }
  }
  Gazetteer g;
  g.add("Dante", "Dante_Alighieri", 0.9);
  g.add("poet", "Poet", 0.5);
  g.add("Florence", "Florence", 0.8);
  g.add("Italy", "Italy", 1.0);
  g.finalize();
  const auto idx = build_index(std::vector<LinkedDocument>{{0, {"Dante_Alighieri", "Florence", "Poet"}},
                                                           {1, {"Dante_Alighieri", "Florence"}},
                                                           {2, {"Florence", "Italy"}}},
                               3);
  const auto row = link_qa_example(
      {"dante", "In what city was the poet Dante born?", {"Florence", "City of Florence", "Italy"}, ""}, g, idx);
  if (row.question_entity != "Dante_Alighieri" || row.answer_entity != "Florence") {
    return "Dante fixture linked (" + row.question_entity + ", " + row.answer_entity + ")";
  }
  detail = std::to_string(checked) + " examples (" + std::to_string(linked) +
           " linked) across 100 fixtures; Dante fixture -> (Dante_Alighieri, Florence)";
  return "";
}

std::string em_conformance(std::string& detail) {
  const auto vectors = io::Json::parse(io::read_file(LTK_TEST_ORACLES "/em_vectors.json"));
  if (vectors.size() < 30) return "only " + std::to_string(vectors.size()) + " vectors";
  for (const auto& v : vectors) {
    const auto p = v.at("prediction").get<std::string>();
    if (normalize_answer(p) != v.at("normalized").get<std::string>()) return "normalize(\"" + p + "\")";
    if (exact_match(p, v.at("golds").get<std::vector<std::string>>()) != v.at("match").get<bool>()) {
      return "exact_match(\"" + p + "\")";
    }
  }
  detail = std::to_string(vectors.size()) + " vectors";
  return "";
}

std::string binning(std::string& detail) {
  Rng rng(404);
  std::vector<ScoredRecord> records;
  for (int i = 0; i < 10000; ++i) {
    // Higher magnitudes are rarer, so the top bins fall under the minimum.
    const std::uint64_t magnitude = std::min(rng.below(8), rng.below(8));
    std::uint64_t hi = 1;
    for (std::uint64_t m = 0; m <= magnitude; ++m) hi *= 10;
    records.push_back({1 + rng.below(hi), static_cast<double>(rng.below(1000)) / 999.0});
  }
  const auto curve = accuracy_by_bin(records, BinScheme{500});
  std::map<int, std::vector<double>> members;
  for (const auto& r : records) {
    const int digits = static_cast<int>(std::to_string(r.count).size()) - 1;
    if (bin_exponent(r.count) != digits) return "count " + std::to_string(r.count) + " misbinned";
    members[digits].push_back(r.value);
  }
  if (curve.bins.size() != members.size()) return "bin count mismatch";
  std::uint64_t total = 0;
  std::size_t trimmed = 0;
  for (const auto& b : curve.bins) {
    const auto it = members.find(b.exponent);
    if (it == members.end() || it->second.size() != b.n) return "bin 10^" + std::to_string(b.exponent) + " size";
    long double sum = 0;
    for (double v : it->second) sum += v;
    const double mean = static_cast<double>(sum / it->second.size());
    if (std::abs(mean - b.mean) > 1e-12) return "bin 10^" + std::to_string(b.exponent) + " mean";
    if (b.trimmed != (b.n < 500)) return "bin 10^" + std::to_string(b.exponent) + " trim flag";
    total += b.n;
    trimmed += b.trimmed;
  }
  if (total != records.size()) return "records lost";
  detail = std::to_string(curve.bins.size()) + " bins, " + std::to_string(trimmed) + " trimmed";
  return "";
}

std::string spearman(std::string& detail) {
  const auto rho = [](const std::vector<double>& x, const std::vector<double>& y) {
    return spearman_rho(std::span<const double>(x), std::span<const double>(y));
  };
  const std::vector<double> base{3, 1, 4, 1.5, 9, 2.6};
  if (std::abs(rho(base, base) - 1.0) > 1e-12) return "identity";
  std::vector<double> neg(base.size());
  std::transform(base.begin(), base.end(), neg.begin(), [](double v) { return -v; });
  if (std::abs(rho(base, neg) + 1.0) > 1e-12) return "reversal";
  // Ranks (1, 2.5, 2.5, 4) vs (1, 3, 2, 4): 4.5 / sqrt(4.5 * 5).
  if (std::abs(rho({1, 2, 2, 3}, {1, 3, 2, 4}) - 4.5 / std::sqrt(22.5)) > 1e-12) return "tie fixture 1";
  // Ranks (1.5, 1.5, 3.5, 3.5) vs (2, 2, 2, 4): 2 / sqrt(4 * 3).
  if (std::abs(rho({5, 5, 7, 7}, {1, 1, 1, 2}) - 1.0 / std::sqrt(3.0)) > 1e-12) return "tie fixture 2";
  Rng rng(8);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int i = 0; i < 100; ++i) {
    const std::size_t n = 5 + rng.below(50);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t j = 0; j < n; ++j) {
      x[j] = std::round(u(rng.engine()));
      y[j] = x[j] * 0.3 + u(rng.engine());
    }
    if (std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; })) x[0] += 1;
    std::vector<double> fx(n);
    std::vector<double> fy(n);
    std::transform(x.begin(), x.end(), fx.begin(), [](double v) { return std::exp(v); });
    std::transform(y.begin(), y.end(), fy.begin(), [](double v) { return v * v * v + 2 * v; });
    if (std::abs(rho(x, y) - rho(fx, fy)) > 1e-12) return "transform invariance, vector " + std::to_string(i);
  }
  detail = "identity, reversal, 2 tie fixtures, 100 transformed vectors";
  return "";
}

std::string scaling_fit(std::string& detail) {
  std::vector<ScalingPoint> line;
  for (double e : {8.0, 9.0, 10.0, 11.5}) line.push_back({std::pow(10.0, e), 0.07 * e - 0.5});
  const auto fit = fit_log_linear(line);
  if (std::abs(fit.slope - 0.07) > 1e-9 || std::abs(fit.intercept + 0.5) > 1e-9) return "collinear slope/intercept";
  if (std::abs(fit.r_squared - 1.0) > 1e-9) return "collinear R^2";
  for (double p : {1e8, 1e11, 1e18}) {
    if (std::abs(extrapolate_size(fit, fit.accuracy_at(p)) / p - 1.0) > 1e-9) return "extrapolation inverse";
  }
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int round = 0; round < 100; ++round) {
    std::vector<ScalingPoint> pts;
    for (int i = 0; i < 6; ++i) pts.push_back({std::pow(10.0, 7 + 5 * u(rng.engine())), u(rng.engine())});
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& p : pts) {
      const long double x = std::log10(static_cast<long double>(p.params));
      sx += x;
      sy += p.accuracy;
      sxx += x * x;
      sxy += x * p.accuracy;
    }
    const long double n = pts.size();
    const long double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const long double intercept = (sy - slope * sx) / n;
    const auto f = fit_log_linear(pts);
    if (std::abs(f.slope - static_cast<double>(slope)) > 1e-9 ||
        std::abs(f.intercept - static_cast<double>(intercept)) > 1e-9) {
      return "noisy fixture " + std::to_string(round);
    }
  }
  detail = "collinear recovery, inverse at 3 sizes, 100 noisy fixtures";
  return "";
}

std::string counterfactual_once(const std::filesystem::path& dir, std::uint64_t seed, std::string& bytes,
                                 std::string& detail) {
  Rng rng(9001);
  SyntheticCorpus c;
  do {
    c = random_corpus(rng, 1, 60);
    c.document_count = 1000;
    c.sets.assign(1000, {});
    c.docs.clear();
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (DocId d = 0; d < 1000; ++d) {
      for (std::size_t e = 0; e < c.entities.size(); ++e) {
        if (u(rng.engine()) < 0.5 / static_cast<double>(1 + e)) c.sets[d].insert(c.entities[e]);
      }
      if (!c.sets[d].empty()) c.docs.push_back({d, {c.sets[d].begin(), c.sets[d].end()}});
    }
  } while (c.entities.size() < 10);
  write_text(dir / "corpus.jsonl", corpus_jsonl(c));
  write_text(dir / "g.tsv", fixture_gazetteer_tsv(c.entities.size()));
  const auto m = ingest_corpus({dir / "corpus.jsonl"}, CorpusFormat::kJsonl);
  const auto g = load_gazetteer(dir / "g.tsv");
  const auto idx = build_index(link_corpus(g, m, 2), m.total_documents(), 4, 2);

  std::vector<QAExample> qa;
  for (std::size_t a = 0; a < c.entities.size(); ++a) {
    for (std::size_t b = 0; b < c.entities.size(); ++b) {
      if (a == b) continue;
      qa.push_back({"q" + std::to_string(a) + "_" + std::to_string(b), "what about w" + std::to_string(a),
                    {"w" + std::to_string(b)}, ""});
    }
  }
  const auto rows = link_qa_dataset(qa, g, idx, 2).rows;
  const auto sample = sample_per_bin(rows, 10, seed);
  const auto removal = removal_set(sample, idx);
  const FilterOutputs out{dir / "filtered.jsonl", dir / "removal.json", dir / "idmap.csv"};
  const auto r = filter_corpus(m, removal, out, &sample);
  if (r.original_documents != r.kept_documents + r.removed_documents) return "conservation";

  const auto fm = ingest_corpus({out.corpus}, CorpusFormat::kJsonl);
  if (fm.total_documents() != r.kept_documents) return "re-ingest count";
  const auto fidx = build_index(link_corpus(g, fm, 2), fm.total_documents(), 4, 2);
  std::size_t sampled = 0;
  for (const auto& b : sample.bins) {
    for (const auto& q : b.questions) {
      ++sampled;
      if (fidx.count_pair(q.question_entity, q.answer_entity) != 0) return "sampled QA " + q.id + " still has documents";
    }
  }
  for (const auto& row : rows) {
    if (row.linked() && fidx.count_pair(row.question_entity, row.answer_entity) > row.relevant_doc_count) {
      return "count rose for " + row.id;
    }
  }
  bytes = read_text(out.corpus) + read_text(out.id_map) + read_text(out.manifest);
  detail = std::to_string(sampled) + " sampled QAs over " + std::to_string(sample.bins.size()) + " bins, removed " +
           std::to_string(r.removed_documents) + "/1000";
  return "";
}

std::string counterfactual(std::string& detail) {
  const auto t0 = Clock::now();
  TempDir a;
  TempDir b;
  std::string bytes_a;
  std::string bytes_b;
  std::string ignored;
  if (auto bad = counterfactual_once(a.path(), 5, bytes_a, detail); !bad.empty()) return bad;
  if (auto bad = counterfactual_once(b.path(), 5, bytes_b, ignored); !bad.empty()) return bad;
  if (bytes_a != bytes_b) return "same seed produced different filtered corpora";
  const double s = seconds_since(t0);
  detail += ", " + std::to_string(s).substr(0, 5) + " s";
  return s < 60.0 ? "" : "runtime " + std::to_string(s) + " s exceeds 60 s";
}

std::string bm25(std::string& detail) {
  Rng rng(50);
  const std::vector<std::string> vocab{"dante", "florence", "poet", "born", "city", "ravenna", "tomb",
                                       "italy", "arno", "bridge", "church", "river", "exile", "verse"};
  std::vector<Passage> passages;
  std::vector<std::vector<std::string>> tokens;
  for (std::size_t i = 0; i < 50; ++i) {
    std::vector<std::string> t;
    std::string s;
    const auto n = 1 + rng.below(40);
    for (std::uint64_t j = 0; j < n; ++j) {
      t.push_back(vocab[rng.below(vocab.size())]);
      s += (j ? " " : "") + t.back();
    }
    passages.push_back({i, i, s, n});
    tokens.push_back(std::move(t));
  }
  const Bm25Index idx(passages);
  std::vector<RecallQuery> queries;
  for (int q = 0; q < 100; ++q) {
    std::vector<std::string> query;
    std::string qs;
    const auto n = 1 + rng.below(5);
    for (std::uint64_t j = 0; j < n; ++j) {
      query.push_back(vocab[rng.below(vocab.size())]);
      qs += (j ? " " : "") + query.back();
    }
    const auto scores = idx.score_all(qs);
    for (std::size_t p = 0; p < passages.size(); ++p) {
      if (std::abs(scores[p] - bm25_oracle(tokens, query, p, 0.9, 0.4)) > 1e-9) {
        return "query " + std::to_string(q) + " passage " + std::to_string(p);
      }
    }
    queries.push_back({"r" + std::to_string(q), 1 + rng.below(1000), qs, {vocab[rng.below(vocab.size())]}});
  }
  for (const auto& q : queries) {
    bool prev = false;
    for (std::size_t k = 1; k <= 50; ++k) {
      const bool now = first_answer_rank(idx, q, k) < k;
      if (prev && !now) return "recall dropped at k=" + std::to_string(k) + " for " + q.id;
      prev = now;
    }
  }
  const PromptExample good{"Where was Dante born?", "Florence", {"Dante was born in Florence."}};
  const PromptExample bad{"Where is Dante buried?", "Ravenna", {"Dante was born in Florence."}};
  const PromptExample test{"Which river?", "", {"the arno"}};
  const std::vector<PromptExample> ok{good, good, good};
  const std::vector<PromptExample> violating{good, bad, good};
  bool rejected = false;
  try {
    build_prompt(violating, test, PromptMode::kBm25, 3);
  } catch (const Error&) {
    rejected = true;
  }
  if (!rejected) return "prompt with a non-answer-bearing shot was accepted";
  build_prompt(ok, test, PromptMode::kBm25, 3);
  detail = "100 queries x 50 passages, recall monotone for 100 questions, violation rejected";
  return "";
}

std::string cli_determinism(std::string& detail) {
  TempDir dir;
  const auto steps = cli_scenario(dir.path());
  std::vector<std::string> first_out;
  std::map<std::string, std::string> first_files;
  std::set<std::string> commands;
  for (const auto& step : steps) {
    const auto r = run_cli(step.args);
    if (r.status != 0) return step.name + " failed: " + r.err;
    first_out.push_back(r.out);
    for (const auto& name : step.outputs) first_files[name] = read_text(dir / name);
    commands.insert(step.name.substr(0, step.name.find(" --")));
  }
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const auto r = run_cli(steps[i].args);
    if (r.status != 0) return steps[i].name + " failed on re-run: " + r.err;
    if (r.out != first_out[i]) return steps[i].name + " stdout differs on re-run";
  }
  for (const auto& [name, bytes] : first_files) {
    if (read_text(dir / name) != bytes) return name + " differs on re-run";
  }
  detail = std::to_string(commands.size()) + " subcommands, " + std::to_string(first_files.size()) +
           " output files";
  return "";
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"index oracle", index_oracle},
      {"merge determinism", merge_determinism},
      {"QA linking", qa_linking},
      {"EM conformance", em_conformance},
      {"binning", binning},
      {"Spearman", spearman},
      {"scaling fit", scaling_fit},
      {"counterfactual soundness", counterfactual},
      {"BM25", bm25},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    std::string detail;
    std::string why;
    try {
      why = c.body(detail);
    } catch (const std::exception& e) {
      why = std::string("exception: ") + e.what();
    }
    if (why.empty()) {
      std::cout << "PASS " << c.name << " (" << detail << ")\n";
    } else {
      std::cout << "FAIL " << c.name << ": " << why << "\n";
      ++failed;
    }
    std::cout.flush();
  }
  return failed == 0 ? 0 : 1;
}
