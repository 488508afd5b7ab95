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

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// Unicode-aware text helpers shared by the linker, the EM scorer and the
// BM25 tokenizer. Inputs are UTF-8; invalid sequences decode as U+FFFD.
namespace ltk::text {

// Byte span [begin, end) into a UTF-8 string.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::string_view in(std::string_view s) const {
    return s.substr(begin, end - begin);
  }
  friend bool operator==(const Span&, const Span&) = default;
};

// A decoded code point and its byte span.
struct CodePoint {
  char32_t value = 0;
  Span span;
};

bool is_valid_utf8(std::string_view s);

std::vector<CodePoint> code_points(std::string_view s);

// Number of code points.
std::size_t length(std::string_view s);

// Full Unicode case folding.
std::string casefold(std::string_view s);

// ASCII punctuation and symbols (the set !"#$%&'()*+,-./:;<=>?@[\]^_`{|}~)
// plus every code point in Unicode general category P*.
bool is_punctuation(char32_t c);

// Unicode White_Space property.
bool is_space(char32_t c);

// Letters and numbers (categories L*, Nd, Nl, No): the regex \w set minus '_'.
bool is_word_char(char32_t c);

// True if the string is empty or contains only whitespace.
bool is_blank(std::string_view s);

// Maximal runs of code points that are neither whitespace nor punctuation.
std::vector<Span> word_spans(std::string_view s);

// Maximal runs of non-whitespace code points.
std::vector<Span> whitespace_spans(std::string_view s);

// word_spans, case-folded.
std::vector<std::string> folded_words(std::string_view s);

// Trims and collapses every whitespace run to one ASCII space.
std::string collapse_whitespace(std::string_view s);

}  // namespace ltk::text
