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

#include "distill/plan.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "core/error.hpp"

namespace ihb {

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::layerwise: return "layerwise";
    case Regime::full_layer: return "full_layer";
    case Regime::task_specific: return "task_specific";
    case Regime::finetune: return "finetune";
  }
  return "?";
}

Regime parse_regime(std::string_view name) {
  if (name == "layerwise") return Regime::layerwise;
  if (name == "full_layer" || name == "full") return Regime::full_layer;
  if (name == "task_specific" || name == "task") return Regime::task_specific;
  if (name == "finetune") return Regime::finetune;
  throw ContractError("unknown regime '" + std::string(name) + "'");
}

std::vector<std::size_t> DistillPlan::resolved_schedule(std::size_t n_layers) const {
  if (!layer_schedule.empty()) return layer_schedule;
  std::vector<std::size_t> s(n_layers);
  std::iota(s.begin(), s.end(), std::size_t{0});
  return s;
}

std::vector<std::size_t> DistillPlan::resolved_mapping(std::size_t student_layers,
                                                       std::size_t teacher_layers) const {
  if (!layer_mapping.empty()) {
    if (layer_mapping.size() != student_layers) {
      throw ContractError("layer_mapping has " + std::to_string(layer_mapping.size()) +
                          " entries for " + std::to_string(student_layers) + " student layers");
    }
    for (std::size_t s = 0; s < layer_mapping.size(); ++s) {
      if (layer_mapping[s] >= teacher_layers) {
        throw ContractError("student layer " + std::to_string(s) + " maps to teacher layer " +
                            std::to_string(layer_mapping[s]) + " of " + std::to_string(teacher_layers));
      }
    }
    return layer_mapping;
  }
  std::vector<std::size_t> m(student_layers);
  if (teacher_layers == student_layers) {
    std::iota(m.begin(), m.end(), std::size_t{0});
  } else if (teacher_layers == 2 * student_layers) {
    for (std::size_t s = 0; s < student_layers; ++s) m[s] = 2 * s + 1;
  } else {
    throw ContractError("no default layer mapping from " + std::to_string(student_layers) +
                        " student layers to " + std::to_string(teacher_layers) + " teacher layers");
  }
  return m;
}

void DistillPlan::validate(std::size_t student_layers, std::size_t teacher_layers) const {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw ContractError("temperature must be positive");
  }
  for (double w : {distill_weight, hidden_weight}) {
    if (!(w >= 0.0 && w <= 1.0)) throw ContractError("loss weights must lie in [0,1]");
  }
  if (regime == Regime::task_specific && std::abs(distill_weight + hidden_weight - 1.0) > 1e-12) {
    throw ContractError("distill_weight + hidden_weight must equal 1");
  }
  if (regime == Regime::layerwise) {
    const auto s = resolved_schedule(student_layers);
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] >= student_layers) {
        throw ContractError("layer_schedule entry " + std::to_string(s[i]) + " out of range");
      }
      if (i > 0 && s[i] <= s[i - 1]) throw ContractError("layer_schedule must be strictly increasing");
    }
  }
  if (regime == Regime::task_specific) (void)resolved_mapping(student_layers, teacher_layers);
}

}  // namespace ihb
