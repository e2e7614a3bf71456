// Copyright 2026 The iasr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "iasr/textnorm.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/uscript.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "iasr/error.hpp"

namespace iasr::textnorm {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

// Fullwidth CJK punctuation. These are all category P already; listed so the
// strip-set does not depend on the ICU version's category tables.
constexpr char32_t kCjkPunct[] = {
    U'，', U'。', U'！', U'？', U'、', U'；', U'：',
    U'“', U'”', U'‘', U'’', U'《', U'》', U'（',
    U'）',
};

bool is_intra_word_joiner(char32_t c) {
  return c == U'\'' || c == U'’' || c == U'-' || c == U'‐' || c == U'‑';
}

bool is_strip_punct(char32_t c) {
  if (U_GET_GC_MASK(static_cast<UChar32>(c)) & U_GC_P_MASK) return true;
  for (char32_t p : kCjkPunct) {
    if (p == c) return true;
  }
  return false;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

// Word-internal character for the apostrophe/hyphen rule. CJK characters are
// tokens of their own, so a joiner next to one would dangle after tokenizing.
bool is_word_char(char32_t c) { return u_isalnum(static_cast<UChar32>(c)) && !is_cjk(c); }

std::u32string compose(const std::u32string& in) {
  UErrorCode err = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(err);
  if (U_FAILURE(err)) return in;
  icu::UnicodeString src = icu::UnicodeString::fromUTF32(
      reinterpret_cast<const UChar32*>(in.data()), static_cast<int32_t>(in.size()));
  icu::UnicodeString out = nfc->normalize(src, err);
  if (U_FAILURE(err)) return in;
  std::u32string result;
  result.reserve(static_cast<std::size_t>(out.length()));
  for (int32_t i = 0; i < out.length();) {
    UChar32 c = out.char32At(i);
    result.push_back(static_cast<char32_t>(c));
    i = out.moveIndex32(i, 1);
  }
  return result;
}

std::u32string normalize_once(const std::u32string& input, const NormalizationProfile& profile) {
  std::u32string text = compose(input);

  if (profile.fold_latin_case) {
    for (char32_t& c : text) {
      UErrorCode err = U_ZERO_ERROR;
      if (uscript_getScript(static_cast<UChar32>(c), &err) == USCRIPT_LATIN && U_SUCCESS(err)) {
        c = static_cast<char32_t>(u_foldCase(static_cast<UChar32>(c), U_FOLD_CASE_DEFAULT));
      }
    }
  }

  std::u32string kept;
  kept.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char32_t c = text[i];
    if (profile.strip_punctuation && is_strip_punct(c)) {
      const bool joiner = is_intra_word_joiner(c) && i > 0 && i + 1 < text.size() &&
                          is_word_char(text[i - 1]) && is_word_char(text[i + 1]);
      if (!joiner) continue;
    }
    kept.push_back(c);
  }

  std::u32string out;
  out.reserve(kept.size());
  bool pending_space = false;
  for (char32_t c : kept) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string_view to_string(TokenMode mode) {
  switch (mode) {
    case TokenMode::kWord: return "word";
    case TokenMode::kChar: return "char";
    case TokenMode::kMixed: return "mixed";
  }
  return "word";
}

TokenMode parse_token_mode(std::string_view name) {
  if (name == "word") return TokenMode::kWord;
  if (name == "char") return TokenMode::kChar;
  if (name == "mixed") return TokenMode::kMixed;
  throw ConfigError("unknown token mode '" + std::string(name) + "'");
}

std::string_view metric_name(TokenMode mode) {
  switch (mode) {
    case TokenMode::kWord: return "WER";
    case TokenMode::kChar: return "CER";
    case TokenMode::kMixed: return "MER";
  }
  return "WER";
}

NormalizationProfile profile_by_name(std::string_view name) {
  if (name == "default") return {"default", true, true};
  if (name == "raw") return {"raw", false, false};
  throw ConfigError("unknown normalization profile '" + std::string(name) + "'");
}

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const int32_t len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    UChar32 c;
    U8_NEXT(p, i, len, c);
    out.push_back(c < 0 ? kReplacement : static_cast<char32_t>(c));
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) {
    uint8_t buf[4];
    int32_t n = 0;
    UBool err = false;
    U8_APPEND(buf, n, 4, static_cast<UChar32>(c), err);
    if (err) {
      n = 0;
      U8_APPEND_UNSAFE(buf, n, kReplacement);
    }
    out.append(reinterpret_cast<const char*>(buf), static_cast<std::size_t>(n));
  }
  return out;
}

NormalizedText normalize(std::string_view text, const NormalizationProfile& profile) {
  std::u32string current = decode_utf8(text);
  // Composition can create new neighbours for the punctuation rule (and vice
  // versa), so iterate to a fixed point. Two passes suffice in practice.
  for (int pass = 0; pass < 8; ++pass) {
    std::u32string next = normalize_once(current, profile);
    if (next == current) break;
    current = std::move(next);
  }
  return NormalizedText(encode_utf8(current), profile.name);
}

NormalizedText normalize(std::string_view text) {
  static const NormalizationProfile kDefault = profile_by_name("default");
  return normalize(text, kDefault);
}

bool is_cjk(char32_t cp) noexcept {
  return (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) ||
         (cp >= 0xF900 && cp <= 0xFAFF);
}

TokenSequence::TokenSequence(std::vector<std::string> tokens, TokenMode mode)
    : tokens_(std::move(tokens)), mode_(mode) {
  for (const auto& t : tokens_) {
    if (t.empty()) throw PreconditionViolation("token sequence contains an empty token");
  }
}

TokenSequence tokenize(const NormalizedText& text, TokenMode mode) {
  const std::u32string cps = decode_utf8(text.text());
  std::vector<std::string> tokens;
  std::u32string word;
  auto flush = [&] {
    if (!word.empty()) tokens.push_back(encode_utf8(word));
    word.clear();
  };
  for (char32_t c : cps) {
    const bool space = c == U' ';
    switch (mode) {
      case TokenMode::kWord:
        if (space) flush(); else word.push_back(c);
        break;
      case TokenMode::kChar:
        if (!space) tokens.push_back(encode_utf8(std::u32string(1, c)));
        break;
      case TokenMode::kMixed:
        if (space) {
          flush();
        } else if (is_cjk(c)) {
          flush();
          tokens.push_back(encode_utf8(std::u32string(1, c)));
        } else {
          word.push_back(c);
        }
        break;
    }
  }
  flush();
  return TokenSequence(std::move(tokens), mode);
}

TokenSequence tokenize_raw(std::string_view text, TokenMode mode,
                           const NormalizationProfile& profile) {
  return tokenize(normalize(text, profile), mode);
}

std::string join_mixed(const TokenSequence& tokens) {
  std::string out;
  bool prev_cjk = false;
  bool first = true;
  for (const auto& tok : tokens.tokens()) {
    const std::u32string cps = decode_utf8(tok);
    const bool cjk = cps.size() == 1 && is_cjk(cps[0]);
    if (!first && !(cjk && prev_cjk)) out.push_back(' ');
    out += tok;
    prev_cjk = cjk;
    first = false;
  }
  return out;
}

}  // namespace iasr::textnorm
