/*
 * Copyright (c) 2026 The Inhibitor Attention Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ihb {

inline constexpr std::size_t kPadId = 0;
inline constexpr std::size_t kUnkId = 1;
inline constexpr std::size_t kClsId = 2;
inline constexpr std::size_t kSepId = 3;
inline constexpr std::size_t kFirstFreeId = 4;
inline constexpr std::size_t kByteVocabSize = 256 + kFirstFreeId;

enum class TokenizerMode { byte_level, whitespace_vocab };

class Tokenizer {
 public:
  static Tokenizer byte_level();
  /// Vocabulary of the most frequent whitespace tokens in `corpus` (ties
  /// broken lexicographically), capped so ids stay below `vocab_size`.
  static Tokenizer whitespace(std::span<const std::string> corpus, std::size_t vocab_size);

  /// [CLS] followed by the token ids of `text`.
  std::vector<std::size_t> encode(std::string_view text) const;
  /// Inverse of encode for byte_level; special ids are skipped.
  std::string decode(std::span<const std::size_t> ids) const;

  TokenizerMode mode() const noexcept { return mode_; }
  std::size_t vocab_size() const noexcept;

 private:
  TokenizerMode mode_ = TokenizerMode::byte_level;
  std::unordered_map<std::string, std::size_t> vocab_;
  std::vector<std::string> words_;  // id - kFirstFreeId -> word
};

}  // namespace ihb
