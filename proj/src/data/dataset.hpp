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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "data/batch.hpp"
#include "data/tokenizer.hpp"

namespace ihb {

struct Example {
  std::string text;
  std::optional<std::size_t> label;
};

struct Dataset {
  std::vector<Example> examples;

  bool labeled() const;
  std::size_t n_classes() const;  // 1 + max label; 0 when unlabeled
};

/// One document per non-empty line.
Dataset load_text(const std::string& path);
/// "label<TAB>text" per non-empty line; labels are non-negative integers.
Dataset load_tsv(const std::string& path);
void save_tsv(const Dataset& data, const std::string& path);
void save_text(const Dataset& data, const std::string& path);

/// Stand-in for the labeled benchmark tasks: lowercase strings whose letters
/// are split into n_classes contiguous groups. Each document favors one
/// group, and its label is the group holding the strict majority of letters.
struct SyntheticTask {
  std::size_t n_examples = 512;
  std::size_t n_classes = 2;
  std::size_t min_len = 8;
  std::size_t max_len = 15;
  double majority_prob = 0.65;
  std::uint64_t seed = 7;
};

Dataset make_synthetic(const SyntheticTask& task);
std::size_t synthetic_label(const std::string& text, std::size_t n_classes);

/// Splits off the trailing `fraction` of examples as a held-out set.
std::pair<Dataset, Dataset> split_holdout(const Dataset& data, double fraction);

/// Seeded shuffle, then fixed-length batches of `seq_len` tokens (padded or
/// truncated). The final batch carries the remainder.
std::vector<Batch> batch_iter(const Dataset& data, const Tokenizer& tokenizer,
                              std::size_t batch_size, std::size_t seq_len, std::uint64_t seed,
                              bool shuffle = true);

}  // namespace ihb
