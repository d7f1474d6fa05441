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

#include "data/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "core/error.hpp"
#include "core/random.hpp"

namespace ihb {

bool Dataset::labeled() const {
  return !examples.empty() &&
         std::all_of(examples.begin(), examples.end(), [](const Example& e) { return e.label.has_value(); });
}

std::size_t Dataset::n_classes() const {
  std::size_t n = 0;
  for (const auto& e : examples) {
    if (e.label) n = std::max(n, *e.label + 1);
  }
  return n;
}

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  return in;
}

void strip_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace

Dataset load_text(const std::string& path) {
  auto in = open_input(path);
  Dataset d;
  std::string line;
  while (std::getline(in, line)) {
    strip_cr(line);
    if (line.empty()) continue;
    d.examples.push_back({line, std::nullopt});
  }
  return d;
}

Dataset load_tsv(const std::string& path) {
  auto in = open_input(path);
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw InputError(path + ":" + std::to_string(lineno) + ": expected 'label<TAB>text'");
    }
    std::size_t label = 0;
    const char* b = line.data();
    const auto [ptr, ec] = std::from_chars(b, b + tab, label);
    if (ec != std::errc{} || ptr != b + tab || tab == 0) {
      throw InputError(path + ":" + std::to_string(lineno) + ": label '" + line.substr(0, tab) +
                       "' is not a non-negative integer");
    }
    d.examples.push_back({line.substr(tab + 1), label});
  }
  return d;
}

void save_tsv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& e : data.examples) {
    if (!e.label) throw InputError("save_tsv: example without a label");
    out << *e.label << '\t' << e.text << '\n';
  }
  if (!out) throw IoError("write to '" + path + "' failed");
}

void save_text(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  for (const auto& e : data.examples) out << e.text << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

namespace {

std::size_t letter_group(char c, std::size_t n_classes) {
  return static_cast<std::size_t>(c - 'a') * n_classes / 26;
}

}  // namespace

std::size_t synthetic_label(const std::string& text, std::size_t n_classes) {
  std::vector<std::size_t> counts(n_classes, 0);
  for (char c : text) {
    if (c >= 'a' && c <= 'z') ++counts[letter_group(c, n_classes)];
  }
  return static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

Dataset make_synthetic(const SyntheticTask& t) {
  if (t.n_classes < 2 || t.n_classes > 26) throw ConfigError("synthetic task needs 2..26 classes");
  if (t.min_len == 0 || t.min_len > t.max_len) throw ConfigError("synthetic lengths must satisfy 1 <= min <= max");
  if (!(t.majority_prob >= 0.0 && t.majority_prob <= 1.0)) {
    throw ConfigError("synthetic majority_prob must lie in [0,1]");
  }
  std::vector<std::vector<char>> groups(t.n_classes);
  for (char c = 'a'; c <= 'z'; ++c) groups[letter_group(c, t.n_classes)].push_back(c);

  Rng rng(t.seed);
  Dataset d;
  d.examples.reserve(t.n_examples);
  while (d.examples.size() < t.n_examples) {
    const std::size_t target = rng.index(t.n_classes);
    const std::size_t len = t.min_len + rng.index(t.max_len - t.min_len + 1);
    std::string s(len, 'a');
    std::vector<std::size_t> counts(t.n_classes, 0);
    for (auto& c : s) {
      const std::size_t g = rng.bernoulli(t.majority_prob) ? target : rng.index(t.n_classes);
      c = groups[g][rng.index(groups[g].size())];
      ++counts[g];
    }
    const std::size_t top = *std::max_element(counts.begin(), counts.end());
    if (std::count(counts.begin(), counts.end(), top) > 1) continue;  // ambiguous, draw again
    const std::size_t label = synthetic_label(s, t.n_classes);
    d.examples.push_back({std::move(s), label});
  }
  return d;
}

std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double fraction) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw ConfigError("holdout fraction must lie in [0,1)");
  const auto n = data.examples.size();
  const auto held = static_cast<std::size_t>(static_cast<double>(n) * fraction);
  Dataset train, eval;
  train.examples.assign(data.examples.begin(), data.examples.end() - static_cast<std::ptrdiff_t>(held));
  eval.examples.assign(data.examples.end() - static_cast<std::ptrdiff_t>(held), data.examples.end());
  return {std::move(train), std::move(eval)};
}

std::vector<Batch> batch_iter(const Dataset& data, const Tokenizer& tok, std::size_t batch_size,
                              std::size_t seq_len, std::uint64_t seed, bool shuffle) {
  if (data.examples.empty()) throw InputError("dataset is empty");
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (seq_len == 0) throw ConfigError("seq_len must be >= 1");
  const bool with_labels = data.labeled();

  std::vector<std::size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
  }

  std::vector<Batch> out;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, order.size() - start);
    Batch b;
    b.size = n;
    b.seq_len = seq_len;
    b.ids.assign(n * seq_len, kPadId);
    b.valid.assign(n * seq_len, 0);
    for (std::size_t r = 0; r < n; ++r) {
      const auto& ex = data.examples[order[start + r]];
      const auto ids = tok.encode(ex.text);
      const std::size_t len = std::min(ids.size(), seq_len);
      for (std::size_t i = 0; i < len; ++i) {
        b.ids[r * seq_len + i] = ids[i];
        b.valid[r * seq_len + i] = 1;
      }
      if (with_labels) b.labels.push_back(*ex.label);
    }
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace ihb
