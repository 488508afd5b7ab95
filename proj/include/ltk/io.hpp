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
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace ltk::io {

using Json = nlohmann::ordered_json;

// Calls fn(line, line_number) for every line of a file (1-based numbers,
// trailing '\n' and '\r' stripped). Throws ltk::Error if unreadable.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::uint64_t)>& fn);

// Parses every non-blank line of a jsonl file as an object. Parse failures
// name the file and line.
void for_each_json_line(const std::filesystem::path& path,
                        const std::function<void(const Json&, std::uint64_t)>& fn);

std::string read_file(const std::filesystem::path& path);

// Output stream that lands at `path` only on commit(): data goes to a
// sibling temp file which is renamed over the target. An uncommitted
// AtomicFile removes its temp file on destruction.
class AtomicFile {
 public:
  explicit AtomicFile(std::filesystem::path path, bool binary = false);
  AtomicFile(const AtomicFile&) = delete;
  AtomicFile& operator=(const AtomicFile&) = delete;
  ~AtomicFile();

  std::ostream& stream() { return out_; }
  void commit();

 private:
  std::filesystem::path path_;
  std::filesystem::path tmp_;
  std::ofstream out_;
  bool committed_ = false;
};

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Little-endian fixed-width and LEB128 encoders.
void put_u32(std::string& out, std::uint32_t v);
void put_u64(std::string& out, std::uint64_t v);
void put_leb128(std::string& out, std::uint64_t v);
void put_bytes(std::string& out, std::string_view bytes);

// Bounds-checked cursor over an immutable byte buffer. Every read past the
// end throws ltk::Error naming `what`.
class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what)
      : data_(data), what_(std::move(what)) {}

  std::uint32_t u32();
  std::uint64_t u64();
  std::uint64_t leb128();
  std::string_view bytes(std::size_t n);

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n);

  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace ltk::io
