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

#include "data/tokenizer.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "core/error.hpp"

namespace ihb {

Tokenizer Tokenizer::byte_level() { return Tokenizer{}; }

Tokenizer Tokenizer::whitespace(std::span<const std::string> corpus, std::size_t vocab_size) {
  if (vocab_size <= kFirstFreeId) {
    throw ContractError("whitespace vocabulary needs room beyond the reserved ids");
  }
  std::map<std::string, std::size_t> freq;
  for (const auto& line : corpus) {
    std::istringstream is(line);
    std::string w;
    while (is >> w) ++freq[w];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Tokenizer t;
  t.mode_ = TokenizerMode::whitespace_vocab;
  const std::size_t cap = std::min(ranked.size(), vocab_size - kFirstFreeId);
  for (std::size_t i = 0; i < cap; ++i) {
    t.vocab_.emplace(ranked[i].first, kFirstFreeId + i);
    t.words_.push_back(ranked[i].first);
  }
  return t;
}

std::size_t Tokenizer::vocab_size() const noexcept {
  return mode_ == TokenizerMode::byte_level ? kByteVocabSize : kFirstFreeId + words_.size();
}

std::vector<std::size_t> Tokenizer::encode(std::string_view text) const {
  std::vector<std::size_t> ids{kClsId};
  if (mode_ == TokenizerMode::byte_level) {
    for (unsigned char b : text) ids.push_back(static_cast<std::size_t>(b) + kFirstFreeId);
    return ids;
  }
  std::istringstream is{std::string(text)};
  std::string w;
  while (is >> w) {
    auto it = vocab_.find(w);
    ids.push_back(it == vocab_.end() ? kUnkId : it->second);
  }
  return ids;
}

std::string Tokenizer::decode(std::span<const std::size_t> ids) const {
  std::string out;
  for (std::size_t id : ids) {
    if (id < kFirstFreeId) continue;
    if (mode_ == TokenizerMode::byte_level) {
      if (id >= kByteVocabSize) throw InputError("byte-level id " + std::to_string(id) + " out of range");
      out.push_back(static_cast<char>(static_cast<unsigned char>(id - kFirstFreeId)));
    } else {
      if (id - kFirstFreeId >= words_.size()) throw InputError("unknown token id " + std::to_string(id));
      if (!out.empty()) out.push_back(' ');
      out += words_[id - kFirstFreeId];
    }
  }
  return out;
}

}  // namespace ihb
