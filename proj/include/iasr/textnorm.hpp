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

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace iasr::textnorm {

enum class TokenMode { kWord, kChar, kMixed };

std::string_view to_string(TokenMode mode);
// Accepts "word", "char", "mixed"; throws ConfigError otherwise.
TokenMode parse_token_mode(std::string_view name);

// Name of the error-rate metric a mode produces: WER, CER or MER.
std::string_view metric_name(TokenMode mode);

struct NormalizationProfile {
  std::string name;
  bool fold_latin_case = true;
  bool strip_punctuation = true;
};

// "default" folds Latin case and strips punctuation; "raw" only composes
// and collapses whitespace. Unknown names throw ConfigError.
NormalizationProfile profile_by_name(std::string_view name);

// Text produced by normalize(). Only normalize() can construct one, so a
// NormalizedText in hand always satisfies the profile's invariants.
class NormalizedText {
 public:
  const std::string& text() const noexcept { return text_; }
  const std::string& profile() const noexcept { return profile_; }
  bool empty() const noexcept { return text_.empty(); }

  friend bool operator==(const NormalizedText&, const NormalizedText&) = default;

 private:
  friend NormalizedText normalize(std::string_view, const NormalizationProfile&);
  NormalizedText(std::string text, std::string profile)
      : text_(std::move(text)), profile_(std::move(profile)) {}

  std::string text_;
  std::string profile_;
};

// NFC composition, Latin-script case folding, punctuation removal (keeping
// apostrophes and hyphens between two alphanumerics), whitespace collapse.
// Total: invalid UTF-8 decodes to U+FFFD.
NormalizedText normalize(std::string_view text, const NormalizationProfile& profile);
NormalizedText normalize(std::string_view text);

class TokenSequence {
 public:
  TokenSequence() = default;
  // Throws PreconditionViolation on an empty token.
  TokenSequence(std::vector<std::string> tokens, TokenMode mode);

  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  TokenMode mode() const noexcept { return mode_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  bool empty() const noexcept { return tokens_.empty(); }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;

 private:
  std::vector<std::string> tokens_;
  TokenMode mode_ = TokenMode::kWord;
};

TokenSequence tokenize(const NormalizedText& text, TokenMode mode);

// normalize + tokenize with the given profile.
TokenSequence tokenize_raw(std::string_view text, TokenMode mode,
                           const NormalizationProfile& profile);

bool is_cjk(char32_t cp) noexcept;

// Joins mixed-mode tokens: no separator between two CJK tokens, one space
// everywhere else.
std::string join_mixed(const TokenSequence& tokens);

std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

}  // namespace iasr::textnorm
