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

#include "ltk/eval_metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <unordered_set>

#include "ltk/error.hpp"
#include "ltk/io.hpp"
#include "ltk/rng.hpp"
#include "ltk/text.hpp"

namespace ltk {
namespace fs = std::filesystem;
using io::Json;

namespace {

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

std::string power_of_ten(int exponent) { return "1" + std::string(static_cast<std::size_t>(exponent), '0'); }

}  // namespace

std::string normalize_answer(std::string_view input) {
  const std::string folded = text::casefold(input);

  std::string no_punct;
  no_punct.reserve(folded.size());
  for (const auto& cp : text::code_points(folded)) {
    if (!text::is_punctuation(cp.value)) no_punct.append(cp.span.in(folded));
  }

  // Articles are whole runs of word characters; each becomes a space.
  std::string no_articles;
  no_articles.reserve(no_punct.size());
  const auto cps = text::code_points(no_punct);
  for (std::size_t i = 0; i < cps.size();) {
    if (!text::is_word_char(cps[i].value)) {
      no_articles.append(cps[i].span.in(no_punct));
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < cps.size() && text::is_word_char(cps[j].value)) ++j;
    const auto word = text::Span{cps[i].span.begin, cps[j - 1].span.end}.in(no_punct);
    if (is_article(word)) {
      no_articles.push_back(' ');
    } else {
      no_articles.append(word);
    }
    i = j;
  }
  return text::collapse_whitespace(no_articles);
}

bool exact_match(std::string_view prediction, const std::vector<std::string>& golds) {
  const std::string p = normalize_answer(prediction);
  return std::any_of(golds.begin(), golds.end(),
                     [&](const std::string& g) { return normalize_answer(g) == p; });
}

std::vector<PredictionRecord> load_predictions(const fs::path& path) {
  std::vector<PredictionRecord> out;
  std::unordered_set<std::string> seen;
  io::for_each_json_line(path, [&](const Json& j, std::uint64_t n) {
    PredictionRecord r;
    const auto& id = j.at("id");
    r.id = id.is_string() ? id.get<std::string>() : id.dump();
    r.prediction = j.at("prediction").get<std::string>();
    if (!seen.insert(r.id).second) {
      throw Error(path.string() + ":" + std::to_string(n) + ": duplicate prediction id '" + r.id + "'");
    }
    out.push_back(std::move(r));
  });
  if (out.empty()) throw Error("predictions file " + path.string() + " contains no records");
  return out;
}

int bin_exponent(std::uint64_t count) {
  if (count == 0) throw Error("relevant document count 0 cannot be binned");
  int e = 0;
  while (count >= 10) {
    count /= 10;
    ++e;
  }
  return e;
}

std::vector<Bin> BinCurve::reported() const {
  std::vector<Bin> out;
  for (const auto& b : bins) {
    if (!b.trimmed) out.push_back(b);
  }
  return out;
}

BinCurve accuracy_by_bin(const std::vector<ScoredRecord>& records, const BinScheme& scheme) {
  if (scheme.min_samples_per_bin < 1) throw Error("min_samples_per_bin must be >= 1");
  std::map<int, std::pair<std::uint64_t, double>> groups;
  for (const auto& r : records) {
    if (!(r.value >= 0.0 && r.value <= 1.0)) throw Error("record value outside [0,1]");
    auto& g = groups[bin_exponent(r.count)];
    ++g.first;
    g.second += r.value;
  }
  BinCurve curve;
  for (const auto& [e, g] : groups) {
    Bin b;
    b.exponent = e;
    b.n = g.first;
    b.mean = g.second / static_cast<double>(g.first);
    b.trimmed = g.first < scheme.min_samples_per_bin;
    curve.bins.push_back(b);
  }
  return curve;
}

std::string curve_to_csv(const BinCurve& curve) {
  std::string out = "bin_lo,bin_hi,n,value,trimmed\n";
  char buf[64];
  for (const auto& b : curve.bins) {
    std::snprintf(buf, sizeof buf, "%.17g", b.mean);
    out += power_of_ten(b.exponent) + "," + power_of_ten(b.exponent + 1) + "," +
           std::to_string(b.n) + "," + buf + "," + (b.trimmed ? "true" : "false") + "\n";
  }
  return out;
}

double human_loo_accuracy(const RatedExample& ex) {
  if (ex.raters.size() < 2) {
    throw Error("example '" + ex.id + "' needs at least 2 raters, has " +
                std::to_string(ex.raters.size()));
  }
  std::uint64_t correct = 0;
  for (std::size_t r = 0; r < ex.raters.size(); ++r) {
    std::vector<std::string> others;
    bool other_unanswered = false;
    for (std::size_t s = 0; s < ex.raters.size(); ++s) {
      if (s == r) continue;
      if (ex.raters[s].empty()) other_unanswered = true;
      others.insert(others.end(), ex.raters[s].begin(), ex.raters[s].end());
    }
    const auto& mine = ex.raters[r];
    const bool ok = mine.empty()
                        ? other_unanswered
                        : !others.empty() && std::any_of(mine.begin(), mine.end(), [&](const std::string& a) {
                            return exact_match(a, others);
                          });
    if (ok) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ex.raters.size());
}

std::vector<ScoredExample> human_loo_accuracy(const std::vector<RatedExample>& examples) {
  std::vector<ScoredExample> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back({ex.id, human_loo_accuracy(ex)});
  return out;
}

std::vector<RatedExample> load_annotations(const fs::path& path) {
  std::vector<RatedExample> out;
  io::for_each_json_line(path, [&](const Json& j, std::uint64_t) {
    RatedExample ex;
    const auto& id = j.at("id");
    ex.id = id.is_string() ? id.get<std::string>() : id.dump();
    for (const auto& rater : j.at("raters")) {
      ex.raters.push_back(rater.get<std::vector<std::string>>());
    }
    out.push_back(std::move(ex));
  });
  return out;
}

HeuristicMode parse_heuristic_mode(std::string_view name) {
  if (name == "pair") return HeuristicMode::kPair;
  if (name == "question_only") return HeuristicMode::kQuestionOnly;
  if (name == "answer_only") return HeuristicMode::kAnswerOnly;
  throw Error("unknown heuristic mode '" + std::string(name) +
              "' (expected pair, question_only or answer_only)");
}

std::vector<HeuristicCount> heuristic_counts(const std::vector<LinkedQA>& rows,
                                             const EntityIndex& index, HeuristicMode mode) {
  std::vector<HeuristicCount> out;
  for (const auto& r : rows) {
    if (!r.linked()) continue;
    HeuristicCount h;
    h.id = r.id;
    h.pair_count = index.count_pair(r.question_entity, r.answer_entity);
    switch (mode) {
      case HeuristicMode::kPair: h.count = h.pair_count; break;
      case HeuristicMode::kQuestionOnly: h.count = index.count_entity(r.question_entity); break;
      case HeuristicMode::kAnswerOnly: h.count = index.count_entity(r.answer_entity); break;
    }
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<HeuristicCount> subpopulation_filter(const std::vector<HeuristicCount>& records,
                                                 std::uint64_t max_pair_count) {
  std::vector<HeuristicCount> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const HeuristicCount& h) { return h.pair_count < max_pair_count; });
  return out;
}

std::vector<AuditItem> audit_sample(const std::vector<LinkedQA>& rows, const EntityIndex& index,
                                    std::size_t n, std::uint64_t seed) {
  std::vector<const LinkedQA*> linked;
  for (const auto& r : rows) {
    if (r.linked()) linked.push_back(&r);
  }
  if (linked.size() < n) {
    throw Error("audit needs " + std::to_string(n) + " linked QA pairs, only " +
                std::to_string(linked.size()) + " available");
  }
  Rng rng(seed);
  std::vector<AuditItem> out;
  out.reserve(n);
  for (std::uint64_t i : rng.sample_indices(linked.size(), n)) {
    const LinkedQA& r = *linked[i];
    const auto docs = index.docs_for_pair(r.question_entity, r.answer_entity);
    if (docs.empty()) {
      throw Error("QA '" + r.id + "' has no relevant documents in this index");
    }
    out.push_back({r.id, docs[rng.below(docs.size())]});
  }
  return out;
}

AuditLabel parse_audit_label(std::string_view name) {
  if (name == "full") return AuditLabel::kFull;
  if (name == "partial") return AuditLabel::kPartial;
  if (name == "none") return AuditLabel::kNone;
  throw Error("unknown audit label '" + std::string(name) + "' (expected full, partial or none)");
}

AuditPrecision audit_precision(const std::vector<AuditLabel>& labels) {
  if (labels.empty()) throw Error("no audit labels");
  std::uint64_t full = 0;
  std::uint64_t partial = 0;
  std::uint64_t none = 0;
  for (auto l : labels) {
    switch (l) {
      case AuditLabel::kFull: ++full; break;
      case AuditLabel::kPartial: ++partial; break;
      case AuditLabel::kNone: ++none; break;
    }
  }
  const auto total = static_cast<double>(labels.size());
  return {labels.size(), full / total, partial / total, none / total};
}

}  // namespace ltk
