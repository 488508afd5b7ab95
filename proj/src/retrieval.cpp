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

#include "ltk/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>

#include "ltk/error.hpp"
#include "ltk/io.hpp"
#include "ltk/text.hpp"

namespace ltk {
namespace fs = std::filesystem;
using io::Json;

namespace {

constexpr std::string_view kBm25Magic = "LTKB";
constexpr std::uint32_t kBm25Version = 1;

// Last character of a token, skipping closing quotes and brackets.
bool ends_sentence(std::string_view token) {
  const auto cps = text::code_points(token);
  for (auto it = cps.rbegin(); it != cps.rend(); ++it) {
    switch (it->value) {
      case U'"': case U'\'': case U')': case U']': case U'}':
      case U'’': case U'”': case U'»':
        continue;
      case U'.': case U'!': case U'?':
        return true;
      default:
        return false;
    }
  }
  return false;
}

std::vector<std::string> split_spaces(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& sp : text::whitespace_spans(s)) out.emplace_back(sp.in(s));
  return out;
}

bool contains_run(const std::vector<std::string>& hay, const std::vector<std::string>& needle) {
  if (needle.empty() || needle.size() > hay.size()) return false;
  return std::search(hay.begin(), hay.end(), needle.begin(), needle.end()) != hay.end();
}

std::uint64_t f64_bits(double v) {
  std::uint64_t u = 0;
  std::memcpy(&u, &v, sizeof u);
  return u;
}

double bits_f64(std::uint64_t u) {
  double v = 0;
  std::memcpy(&v, &u, sizeof v);
  return v;
}

}  // namespace

std::vector<Passage> segment_passages(std::string_view doc, DocId doc_id, PassageId first_id) {
  // Paragraphs: maximal runs of non-blank lines.
  std::vector<text::Span> paragraphs;
  std::size_t pos = 0;
  bool open = false;
  std::size_t para_begin = 0;
  std::size_t para_end = 0;
  while (pos <= doc.size()) {
    std::size_t nl = doc.find('\n', pos);
    if (nl == std::string_view::npos) nl = doc.size();
    const auto line = doc.substr(pos, nl - pos);
    if (text::is_blank(line)) {
      if (open) paragraphs.push_back({para_begin, para_end});
      open = false;
    } else {
      if (!open) para_begin = pos;
      open = true;
      para_end = nl;
    }
    pos = nl + 1;
  }
  if (open) paragraphs.push_back({para_begin, para_end});

  std::vector<Passage> out;
  const auto emit = [&](std::string_view para, const std::vector<text::Span>& tokens,
                        std::size_t from, std::size_t to) {
    if (from == to) return;
    Passage p;
    p.id = first_id + out.size();
    p.doc_id = doc_id;
    p.text = std::string(para.substr(tokens[from].begin, tokens[to - 1].end - tokens[from].begin));
    p.token_count = to - from;
    out.push_back(std::move(p));
  };
  for (const auto& ps : paragraphs) {
    const auto para = ps.in(doc);
    const auto tokens = text::whitespace_spans(para);
    if (tokens.size() <= kMaxPassageTokens) {
      emit(para, tokens, 0, tokens.size());
      continue;
    }
    std::size_t piece = 0;     // start of the piece being packed
    std::size_t sentence = 0;  // start of the current sentence
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      const bool last = i + 1 == tokens.size();
      if (!ends_sentence(tokens[i].in(para)) && !last) continue;
      const std::size_t end = i + 1;
      if (end - piece > kMaxPassageTokens) {
        // Flush what was packed before this sentence, then cut the sentence
        // itself if it alone is too long.
        emit(para, tokens, piece, sentence);
        piece = sentence;
        while (end - piece > kMaxPassageTokens) {
          emit(para, tokens, piece, piece + kMaxPassageTokens);
          piece += kMaxPassageTokens;
        }
      }
      sentence = end;
    }
    emit(para, tokens, piece, tokens.size());
  }
  return out;
}

Bm25Index::Bm25Index(std::vector<Passage> passages, Bm25Params params)
    : passages_(std::move(passages)), params_(params) {
  if (passages_.empty()) throw Error("cannot build a BM25 index over zero passages");
  if (passages_.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error("too many passages for one BM25 index");
  }
  if (!(params_.k1 >= 0.0) || !(params_.b >= 0.0 && params_.b <= 1.0)) {
    throw Error("BM25 parameters need k1 >= 0 and b in [0,1]");
  }
  lengths_.reserve(passages_.size());
  std::unordered_map<std::string, std::uint32_t> tf;
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    tf.clear();
    const auto words = text::folded_words(passages_[i].text);
    for (const auto& w : words) ++tf[w];
    // Sorted insertion keeps posting order independent of hash order.
    std::vector<std::pair<std::string, std::uint32_t>> sorted(tf.begin(), tf.end());
    std::sort(sorted.begin(), sorted.end());
    for (auto& [term, n] : sorted) terms_[term].push_back({static_cast<std::uint32_t>(i), n});
    lengths_.push_back(words.size());
    total += words.size();
  }
  avg_length_ = static_cast<double>(total) / static_cast<double>(passages_.size());
}

std::uint64_t Bm25Index::document_frequency(std::string_view term) const {
  auto it = terms_.find(std::string(term));
  return it == terms_.end() ? 0 : it->second.size();
}

double Bm25Index::idf(std::string_view term) const {
  const double n = static_cast<double>(passages_.size());
  const double df = static_cast<double>(document_frequency(term));
  return std::log(1.0 + (n - df + 0.5) / (df + 0.5));
}

std::vector<double> Bm25Index::score_all(std::string_view query) const {
  std::vector<double> scores(passages_.size(), 0.0);
  const double k1 = params_.k1;
  const double b = params_.b;
  for (const auto& term : text::folded_words(query)) {
    auto it = terms_.find(term);
    if (it == terms_.end()) continue;
    const double w = idf(term);
    for (const auto& p : it->second) {
      const double tf = p.tf;
      const double norm = k1 * (1.0 - b + b * static_cast<double>(lengths_[p.passage]) / avg_length_);
      scores[p.passage] += w * (tf * (k1 + 1.0)) / (tf + norm);
    }
  }
  return scores;
}

std::vector<ScoredPassage> Bm25Index::query_topk(std::string_view query, std::size_t k) const {
  if (k == 0) throw Error("k must be >= 1");
  const auto scores = score_all(query);
  std::vector<bool> touched(passages_.size(), false);
  for (const auto& term : text::folded_words(query)) {
    auto it = terms_.find(term);
    if (it == terms_.end()) continue;
    for (const auto& p : it->second) touched[p.passage] = true;
  }
  std::vector<ScoredPassage> hits;
  for (std::size_t i = 0; i < passages_.size(); ++i) {
    if (touched[i]) hits.push_back({&passages_[i], scores[i]});
  }
  const auto better = [](const ScoredPassage& a, const ScoredPassage& b) {
    return a.score != b.score ? a.score > b.score : a.passage->id < b.passage->id;
  };
  if (hits.size() > k) {
    std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(k), hits.end(), better);
    hits.resize(k);
  } else {
    std::sort(hits.begin(), hits.end(), better);
  }
  return hits;
}

std::string serialize(const Bm25Index& index) {
  std::string out;
  io::put_bytes(out, kBm25Magic);
  io::put_u32(out, kBm25Version);
  io::put_u64(out, f64_bits(index.params().k1));
  io::put_u64(out, f64_bits(index.params().b));
  io::put_u64(out, index.passage_count());
  for (const auto& p : index.passages()) {
    io::put_u64(out, p.id);
    io::put_u64(out, p.doc_id);
    io::put_u64(out, p.token_count);
    io::put_u64(out, p.text.size());
    io::put_bytes(out, p.text);
  }
  return out;
}

Bm25Index deserialize_bm25(std::string_view bytes) {
  io::ByteReader in(bytes, "BM25 index");
  if (in.remaining() < 4 || in.bytes(4) != kBm25Magic) throw Error("BM25 index: bad magic");
  if (const auto v = in.u32(); v != kBm25Version) {
    throw Error("BM25 index: unsupported format version " + std::to_string(v));
  }
  Bm25Params params;
  params.k1 = bits_f64(in.u64());
  params.b = bits_f64(in.u64());
  const std::uint64_t n = in.u64();
  std::vector<Passage> passages;
  passages.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(n, in.remaining() / 32)));
  for (std::uint64_t i = 0; i < n; ++i) {
    Passage p;
    p.id = in.u64();
    p.doc_id = in.u64();
    p.token_count = in.u64();
    p.text = std::string(in.bytes(static_cast<std::size_t>(in.u64())));
    passages.push_back(std::move(p));
  }
  if (!in.done()) throw Error("BM25 index: trailing bytes");
  return Bm25Index(std::move(passages), params);
}

void save_bm25(const Bm25Index& index, const fs::path& path) {
  io::write_file_atomic(path, serialize(index));
}

Bm25Index load_bm25(const fs::path& path) {
  try {
    return deserialize_bm25(io::read_file(path));
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

std::vector<Passage> load_passages(const fs::path& path) {
  std::vector<Passage> out;
  io::for_each_json_line(path, [&](const Json& j, std::uint64_t) {
    Passage p;
    p.id = j.at("passage_id").get<PassageId>();
    p.doc_id = j.at("doc_id").get<DocId>();
    p.text = j.at("text").get<std::string>();
    p.token_count = j.value("token_count", std::uint64_t{text::whitespace_spans(p.text).size()});
    out.push_back(std::move(p));
  });
  return out;
}

std::string to_jsonl(const Passage& p) {
  Json j;
  j["passage_id"] = p.id;
  j["doc_id"] = p.doc_id;
  j["token_count"] = p.token_count;
  j["text"] = p.text;
  return j.dump();
}

bool contains_answer(std::string_view passage, const std::vector<std::string>& aliases) {
  const auto hay = split_spaces(normalize_answer(passage));
  return std::any_of(aliases.begin(), aliases.end(), [&](const std::string& a) {
    return contains_run(hay, split_spaces(normalize_answer(a)));
  });
}

std::size_t first_answer_rank(const Bm25Index& index, const RecallQuery& query, std::size_t depth) {
  const auto hits = index.query_topk(query.question, depth);
  for (std::size_t r = 0; r < hits.size(); ++r) {
    if (contains_answer(hits[r].passage->text, query.answers)) return r;
  }
  return depth;
}

std::vector<RecallCurve> recall_curve(const std::vector<RecallQuery>& queries, const Bm25Index& index,
                                      const std::vector<std::size_t>& ks, const BinScheme& scheme) {
  if (ks.empty()) throw Error("recall needs at least one k");
  const std::size_t depth = *std::max_element(ks.begin(), ks.end());
  if (depth == 0) throw Error("k must be >= 1");
  std::vector<std::size_t> first_hit;
  first_hit.reserve(queries.size());
  for (const auto& q : queries) first_hit.push_back(first_answer_rank(index, q, depth));
  std::vector<RecallCurve> out;
  for (std::size_t k : ks) {
    if (k == 0) throw Error("k must be >= 1");
    std::vector<ScoredRecord> records;
    records.reserve(queries.size());
    for (std::size_t i = 0; i < queries.size(); ++i) {
      records.push_back({queries[i].relevant_doc_count, first_hit[i] < k ? 1.0 : 0.0});
    }
    out.push_back({k, accuracy_by_bin(records, scheme)});
  }
  return out;
}

std::string recall_to_csv(const std::vector<RecallCurve>& curves) {
  std::string out = "k,bin_lo,bin_hi,n,value,trimmed\n";
  for (const auto& c : curves) {
    const std::string csv = curve_to_csv(c.curve);
    // Reuse the plain curve rows, minus their header.
    std::size_t line = csv.find('\n') + 1;
    while (line < csv.size()) {
      const std::size_t nl = csv.find('\n', line);
      out += std::to_string(c.k) + "," + csv.substr(line, nl - line + 1);
      line = nl + 1;
    }
  }
  return out;
}

std::string oracle_context(std::string_view page, std::string_view answer, std::size_t window) {
  const auto needle = split_spaces(normalize_answer(answer));
  if (needle.empty()) throw Error("gold answer '" + std::string(answer) + "' normalizes to nothing");
  const auto tokens = text::whitespace_spans(page);
  // Normalized sub-tokens, each mapped back to its whitespace token.
  std::vector<std::string> stream;
  std::vector<std::size_t> owner;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    for (auto& sub : split_spaces(normalize_answer(tokens[i].in(page)))) {
      stream.push_back(std::move(sub));
      owner.push_back(i);
    }
  }
  const auto hit = std::search(stream.begin(), stream.end(), needle.begin(), needle.end());
  if (hit == stream.end()) {
    throw Error("gold answer '" + std::string(answer) + "' not found in gold page");
  }
  const std::size_t at = static_cast<std::size_t>(hit - stream.begin());
  const std::size_t first = owner[at];
  const std::size_t last = owner[at + needle.size() - 1];
  const std::size_t mid = (first + last) / 2;
  const std::size_t n = tokens.size();
  std::size_t begin = mid > window / 2 ? mid - window / 2 : 0;
  if (n >= window) {
    begin = std::min(begin, n - window);
  } else {
    begin = 0;
  }
  const std::size_t end = std::min(n, begin + window);
  return std::string(page.substr(tokens[begin].begin, tokens[end - 1].end - tokens[begin].begin));
}

PromptMode parse_prompt_mode(std::string_view name) {
  if (name == "closed_book" || name == "closed-book") return PromptMode::kClosedBook;
  if (name == "bm25") return PromptMode::kBm25;
  if (name == "oracle") return PromptMode::kOracle;
  throw Error("unknown prompt mode '" + std::string(name) + "' (expected closed_book, bm25 or oracle)");
}

std::string build_prompt(std::span<const PromptExample> incontext, const PromptExample& test,
                         PromptMode mode, std::size_t shots) {
  if (incontext.size() < shots) {
    throw Error("prompt needs " + std::to_string(shots) + " in-context examples, got " +
                std::to_string(incontext.size()));
  }
  const auto context = [&](const PromptExample& ex, std::string& out) {
    if (mode == PromptMode::kClosedBook) return;
    for (const auto& p : ex.passages) out += text::collapse_whitespace(p) + "\n";
  };
  std::string out;
  for (std::size_t i = 0; i < shots; ++i) {
    const auto& ex = incontext[i];
    if (mode == PromptMode::kBm25 &&
        std::none_of(ex.passages.begin(), ex.passages.end(),
                     [&](const std::string& p) { return contains_answer(p, {ex.answer}); })) {
      throw Error("in-context example " + std::to_string(i) + " (\"" + ex.question +
                  "\") has no retrieved passage containing its answer");
    }
    if (mode == PromptMode::kOracle && ex.passages.empty()) {
      throw Error("in-context example " + std::to_string(i) + " has no gold context");
    }
    context(ex, out);
    out += "Q: " + ex.question + "\nA: " + ex.answer + "\n";
  }
  if (mode == PromptMode::kOracle && test.passages.empty()) {
    throw Error("test question has no gold context");
  }
  context(test, out);
  out += "Q: " + test.question + "\nA:";
  return out;
}

}  // namespace ltk
