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
#include <string_view>
#include <vector>

namespace ihb {

enum class Regime { layerwise, full_layer, task_specific, finetune };
const char* to_string(Regime r) noexcept;
Regime parse_regime(std::string_view name);

struct DistillPlan {
  Regime regime = Regime::layerwise;
  std::vector<std::size_t> layer_schedule;  // empty: every layer bottom-up
  std::size_t epochs_per_layer = 2;
  double temperature = 4.0;
  double distill_weight = 0.5;
  double hidden_weight = 0.5;
  std::vector<std::size_t> layer_mapping;  // student layer -> teacher layer; empty: default

  /// Throws ContractError on out-of-range values or a non-increasing
  /// layerwise schedule.
  void validate(std::size_t student_layers, std::size_t teacher_layers) const;

  std::vector<std::size_t> resolved_schedule(std::size_t n_layers) const;
  std::vector<std::size_t> resolved_mapping(std::size_t student_layers, std::size_t teacher_layers) const;

  friend bool operator==(const DistillPlan&, const DistillPlan&) = default;
};

}  // namespace ihb
