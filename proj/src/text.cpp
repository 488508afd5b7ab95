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

#include "ltk/text.hpp"

#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

namespace ltk::text {
namespace {

// Decodes the code point at byte offset i and advances i.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  UChar32 c = 0;
  int32_t pos = static_cast<int32_t>(i);
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  U8_NEXT(bytes, pos, static_cast<int32_t>(s.size()), c);
  i = static_cast<std::size_t>(pos);
  return c < 0 ? U'\uFFFD' : static_cast<char32_t>(c);
}

template <typename Pred>
std::vector<Span> runs(std::string_view s, Pred inside) {
  std::vector<Span> out;
  std::size_t i = 0;
  bool open = false;
  std::size_t start = 0;
  while (i < s.size()) {
    std::size_t at = i;
    char32_t c = next_code_point(s, i);
    if (inside(c)) {
      if (!open) {
        open = true;
        start = at;
      }
    } else if (open) {
      out.push_back({start, at});
      open = false;
    }
  }
  if (open) out.push_back({start, s.size()});
  return out;
}

}  // namespace

bool is_valid_utf8(std::string_view s) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  int32_t i = 0;
  const auto n = static_cast<int32_t>(s.size());
  while (i < n) {
    UChar32 c = 0;
    U8_NEXT(bytes, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

std::vector<CodePoint> code_points(std::string_view s) {
  std::vector<CodePoint> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const std::size_t at = i;
    const char32_t c = next_code_point(s, i);
    out.push_back({c, {at, i}});
  }
  return out;
}

std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < s.size(); ++n) next_code_point(s, i);
  return n;
}

std::string casefold(std::string_view s) {
  bool ascii = true;
  for (char ch : s) {
    if (static_cast<unsigned char>(ch) >= 0x80) {
      ascii = false;
      break;
    }
  }
  std::string out;
  if (ascii) {
    out.reserve(s.size());
    for (char ch : s) {
      out.push_back(ch >= 'A' && ch <= 'Z' ? static_cast<char>(ch - 'A' + 'a') : ch);
    }
    return out;
  }
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.foldCase(U_FOLD_CASE_DEFAULT);
  u.toUTF8String(out);
  return out;
}

bool is_punctuation(char32_t c) {
  if (c < 0x80) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) ||
           (c >= 0x5B && c <= 0x60) || (c >= 0x7B && c <= 0x7E);
  }
  return (U_GET_GC_MASK(static_cast<UChar32>(c)) & U_GC_P_MASK) != 0;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) != 0; }

bool is_word_char(char32_t c) {
  const auto mask = U_GET_GC_MASK(static_cast<UChar32>(c));
  return (mask & (U_GC_L_MASK | U_GC_ND_MASK | U_GC_NL_MASK | U_GC_NO_MASK)) != 0;
}

bool is_blank(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (!is_space(next_code_point(s, i))) return false;
  }
  return true;
}

std::vector<Span> word_spans(std::string_view s) {
  return runs(s, [](char32_t c) { return !is_space(c) && !is_punctuation(c); });
}

std::vector<Span> whitespace_spans(std::string_view s) {
  return runs(s, [](char32_t c) { return !is_space(c); });
}

std::vector<std::string> folded_words(std::string_view s) {
  std::vector<std::string> out;
  for (const Span& sp : word_spans(s)) out.push_back(casefold(sp.in(s)));
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  for (const Span& sp : whitespace_spans(s)) {
    if (!out.empty()) out.push_back(' ');
    out.append(sp.in(s));
  }
  return out;
}

}  // namespace ltk::text
