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
#include <string>
#include <vector>

#include "data/dataset.hpp"
#include "distill/plan.hpp"
#include "model/encoder.hpp"
#include "optim/optim.hpp"

namespace ihb {

struct TrainSettings {
  double learning_rate = 5e-4;  // peak of the schedule
  double warmup_ratio = 0.05;
  Decay lr_decay = Decay::cosine;
  std::size_t batch_size = 16;
  std::size_t accumulation_steps = 1;  // 0 is read as 1
  std::size_t epochs = 2;
  AdamWHyper adam{};
  std::size_t seq_len = 32;
  std::size_t max_steps = 0;  // 0: no cap on applied optimizer steps
  std::uint64_t seed = 1;

  std::size_t effective_accumulation() const { return accumulation_steps == 0 ? 1 : accumulation_steps; }
  friend bool operator==(const TrainSettings& a, const TrainSettings& b);
};

struct DataSettings {
  std::string train_path;  // empty: synthetic corpus
  std::string eval_path;   // empty: hold out a slice of the training data
  SyntheticTask synthetic{};
  double holdout_fraction = 0.2;
  friend bool operator==(const DataSettings& a, const DataSettings& b);
};

struct RunConfig {
  std::string name = "custom";
  EncoderConfig model{};
  TrainSettings train{};
  DistillPlan plan{};
  DataSettings data{};

  /// Rough parameter count; runs above ~10M parameters get a resource warning.
  std::size_t parameter_estimate() const;
  bool full_scale() const { return parameter_estimate() > 10'000'000; }
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses the key = value format:
///   # comment
///   [section]
///   key = value
/// Sections: run, model, train, distill, data. Lists are comma separated.
/// Unknown keys, duplicates and type errors raise ConfigError naming the
/// line and key.
RunConfig parse_config(const std::string& text, const std::string& origin = "<string>");
RunConfig load_config(const std::string& path);

/// Canonical text form; parse_config(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Built-in presets: layerwise, fulllayer, taskkd, finetune (full-scale
/// hyperparameter tables) and desk/<name> (laptop-sized counterparts).
/// `full_layer` and `task_specific` are accepted as aliases.
RunConfig builtin_preset(const std::string& name);
std::vector<std::string> builtin_preset_names();

/// A path that exists is loaded; otherwise a built-in preset name is tried.
RunConfig resolve_config(const std::string& path_or_preset);

std::size_t levenshtein(const std::string& a, const std::string& b);

}  // namespace ihb
