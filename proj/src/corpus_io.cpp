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

#include "ltk/corpus_io.hpp"

#include <algorithm>
#include <fstream>

#include "ltk/error.hpp"
#include "ltk/io.hpp"
#include "ltk/text.hpp"

namespace ltk {
namespace fs = std::filesystem;
using io::Json;

namespace {

std::string where(const fs::path& shard, std::uint64_t line) {
  return shard.string() + ":" + std::to_string(line);
}

// Parses one jsonl record. Returns false for records without usable text.
bool parse_record(std::string_view line, const fs::path& shard, std::uint64_t line_no,
                  Document& doc) {
  Json j = Json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(where(shard, line_no) + ": malformed JSON record");
  }
  auto text = j.find("text");
  if (text == j.end() || !text->is_string()) {
    throw Error(where(shard, line_no) + ": record has no string \"text\" field");
  }
  doc.external_id.reset();
  if (auto id = j.find("id"); id != j.end() && !id->is_null()) {
    if (id->is_string()) {
      doc.external_id = id->get<std::string>();
    } else if (id->is_number_integer()) {
      doc.external_id = id->dump();
    } else {
      throw Error(where(shard, line_no) + ": \"id\" must be a string");
    }
  }
  doc.text = text->get<std::string>();
  return !text::is_blank(doc.text);
}

ShardInfo scan_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open shard " + path.string());
  ShardInfo shard;
  shard.path = path;
  std::string line;
  std::uint64_t offset = 0;
  std::uint64_t line_no = 0;
  Document doc;
  while (std::getline(in, line)) {
    ++line_no;
    const std::uint64_t start = offset;
    offset += line.size() + 1;
    if (text::is_blank(line)) continue;
    if (parse_record(line, path, line_no, doc)) {
      shard.record_offsets.push_back(start);
    } else {
      ++shard.skipped;
    }
  }
  if (in.bad()) throw Error("read error in shard " + path.string());
  shard.document_count = shard.record_offsets.size();
  shard.byte_size = fs::file_size(path);
  return shard;
}

ShardInfo scan_textdir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });
  ShardInfo shard;
  shard.path = dir;
  for (const auto& f : files) {
    std::string body = io::read_file(f);
    if (!text::is_valid_utf8(body)) throw Error(f.string() + ": invalid UTF-8");
    shard.byte_size += body.size();
    if (text::is_blank(body)) {
      ++shard.skipped;
      continue;
    }
    shard.files.push_back(f);
  }
  shard.document_count = shard.files.size();
  return shard;
}

Document read_jsonl_record(const ShardInfo& shard, std::size_t local, std::string* raw) {
  std::ifstream in(shard.path, std::ios::binary);
  if (!in) throw Error("cannot open shard " + shard.path.string());
  in.seekg(static_cast<std::streamoff>(shard.record_offsets[local]));
  std::string line;
  if (!std::getline(in, line)) throw Error("shard changed on disk: " + shard.path.string());
  Document doc;
  if (!parse_record(line, shard.path, 0, doc)) {
    throw Error("shard changed on disk: " + shard.path.string());
  }
  if (raw != nullptr) *raw = std::move(line);
  return doc;
}

}  // namespace

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl") return CorpusFormat::kJsonl;
  if (name == "textdir") return CorpusFormat::kTextDir;
  throw Error("unknown corpus format '" + std::string(name) + "' (expected jsonl or textdir)");
}

std::string_view to_string(CorpusFormat format) {
  return format == CorpusFormat::kJsonl ? "jsonl" : "textdir";
}

CorpusManifest::CorpusManifest(CorpusFormat format, std::vector<ShardInfo> shards)
    : format_(format), shards_(std::move(shards)) {
  for (auto& s : shards_) {
    if (s.first_id != total_) throw Error("manifest shard offsets are not contiguous");
    if (s.document_count == 0) {
      throw Error("shard contributes no documents: " + s.path.string());
    }
    total_ += s.document_count;
  }
}

std::uint64_t CorpusManifest::skipped_records() const {
  std::uint64_t n = 0;
  for (const auto& s : shards_) n += s.skipped;
  return n;
}

std::size_t CorpusManifest::shard_of(DocId id) const {
  if (id >= total_) {
    throw Error("document id " + std::to_string(id) + " out of range (corpus has " +
                std::to_string(total_) + " documents)");
  }
  auto it = std::upper_bound(shards_.begin(), shards_.end(), id,
                             [](DocId v, const ShardInfo& s) { return v < s.first_id; });
  return static_cast<std::size_t>(std::distance(shards_.begin(), it) - 1);
}

bool operator==(const CorpusManifest& a, const CorpusManifest& b) {
  if (a.format_ != b.format_ || a.total_ != b.total_ || a.shards_.size() != b.shards_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.shards_.size(); ++i) {
    const auto& x = a.shards_[i];
    const auto& y = b.shards_[i];
    if (x.path != y.path || x.first_id != y.first_id || x.document_count != y.document_count ||
        x.skipped != y.skipped || x.byte_size != y.byte_size ||
        x.record_offsets != y.record_offsets || x.files != y.files) {
      return false;
    }
  }
  return true;
}

CorpusManifest ingest_corpus(const std::vector<fs::path>& paths, CorpusFormat format) {
  if (paths.empty()) throw Error("no input shards given");
  std::vector<ShardInfo> shards;
  DocId next = 0;
  for (const auto& p : paths) {
    ShardInfo s = format == CorpusFormat::kJsonl ? scan_jsonl(p) : scan_textdir(p);
    s.first_id = next;
    next += s.document_count;
    shards.push_back(std::move(s));
  }
  return CorpusManifest(format, std::move(shards));
}

Document get_document(const CorpusManifest& manifest, DocId id) {
  const std::size_t si = manifest.shard_of(id);
  const ShardInfo& shard = manifest.shards()[si];
  const std::size_t local = static_cast<std::size_t>(id - shard.first_id);
  Document doc;
  if (manifest.format() == CorpusFormat::kJsonl) {
    doc = read_jsonl_record(shard, local, nullptr);
  } else {
    doc.text = io::read_file(shard.files[local]);
    doc.external_id = fs::relative(shard.files[local], shard.path).generic_string();
  }
  doc.internal_id = id;
  return doc;
}

void for_each_document(const CorpusManifest& manifest, std::size_t shard_index,
                       const DocumentVisitor& visit) {
  const ShardInfo& shard = manifest.shards().at(shard_index);
  Document doc;
  if (manifest.format() == CorpusFormat::kTextDir) {
    for (std::size_t i = 0; i < shard.files.size(); ++i) {
      doc.internal_id = shard.first_id + i;
      doc.text = io::read_file(shard.files[i]);
      doc.external_id = fs::relative(shard.files[i], shard.path).generic_string();
      visit(doc, {});
    }
    return;
  }
  std::ifstream in(shard.path, std::ios::binary);
  if (!in) throw Error("cannot open shard " + shard.path.string());
  std::string line;
  std::uint64_t offset = 0;
  std::uint64_t line_no = 0;
  std::size_t next = 0;
  while (next < shard.record_offsets.size() && std::getline(in, line)) {
    ++line_no;
    const std::uint64_t start = offset;
    offset += line.size() + 1;
    if (start != shard.record_offsets[next]) continue;
    if (!parse_record(line, shard.path, line_no, doc)) {
      throw Error("shard changed on disk: " + shard.path.string());
    }
    doc.internal_id = shard.first_id + next;
    ++next;
    visit(doc, line);
  }
  if (next != shard.record_offsets.size()) {
    throw Error("shard changed on disk: " + shard.path.string());
  }
}

void for_each_document(const CorpusManifest& manifest, const DocumentVisitor& visit) {
  for (std::size_t s = 0; s < manifest.shards().size(); ++s) for_each_document(manifest, s, visit);
}

std::string manifest_to_json(const CorpusManifest& manifest) {
  Json j;
  j["format"] = std::string(to_string(manifest.format()));
  j["total_documents"] = manifest.total_documents();
  j["skipped_records"] = manifest.skipped_records();
  Json shards = Json::array();
  for (const auto& s : manifest.shards()) {
    shards.push_back({{"path", s.path.string()},
                      {"first_id", s.first_id},
                      {"document_count", s.document_count},
                      {"skipped", s.skipped},
                      {"byte_size", s.byte_size}});
  }
  j["shards"] = std::move(shards);
  return j.dump(2) + "\n";
}

void save_manifest(const CorpusManifest& manifest, const fs::path& path) {
  io::write_file_atomic(path, manifest_to_json(manifest));
}

CorpusManifest load_manifest(const fs::path& path) {
  Json j = Json::parse(io::read_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(path.string() + ": malformed manifest");
  try {
    const CorpusFormat format = parse_corpus_format(j.at("format").get<std::string>());
    std::vector<fs::path> paths;
    for (const auto& s : j.at("shards")) paths.emplace_back(s.at("path").get<std::string>());
    CorpusManifest m = ingest_corpus(paths, format);
    const auto& shards = j.at("shards");
    for (std::size_t i = 0; i < paths.size(); ++i) {
      const auto& got = m.shards()[i];
      if (got.document_count != shards[i].at("document_count").get<std::uint64_t>() ||
          got.byte_size != shards[i].at("byte_size").get<std::uint64_t>()) {
        throw Error(path.string() + ": shard " + got.path.string() +
                    " no longer matches the manifest");
      }
    }
    if (m.total_documents() != j.at("total_documents").get<std::uint64_t>()) {
      throw Error(path.string() + ": total_documents does not match shards");
    }
    return m;
  } catch (const Json::exception& e) {
    throw Error(path.string() + ": malformed manifest: " + e.what());
  }
}

}  // namespace ltk
