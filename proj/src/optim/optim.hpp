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
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "model/encoder.hpp"

namespace ihb {

enum class Decay { cosine, linear };
const char* to_string(Decay d) noexcept;
Decay parse_decay(std::string_view name);

/// Linear warmup from 0 to peak over floor(warmup_ratio * total_steps)
/// steps, then cosine half-period or linear ramp to 0 at total_steps.
struct LrSchedule {
  double peak_lr = 5e-4;
  double warmup_ratio = 0.05;
  std::size_t total_steps = 1;
  Decay decay = Decay::cosine;

  std::size_t warmup_steps() const;
  void validate() const;
};

double lr_at(std::size_t step, const LrSchedule& schedule);

struct AdamWHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

/// Moments of a single tensor.
struct AdamWMoments {
  std::vector<double> m, v;
  std::size_t t = 0;
};

/// One bias-corrected AdamW update with decoupled decay:
///   p <- p - lr * (mhat / (sqrt(vhat) + eps) + wd * p)
void adamw_step(std::span<double> param, std::span<const double> grad, AdamWMoments& state,
                double lr, const AdamWHyper& hyper, bool apply_decay);

/// AdamW over a model's parameter registry. Frozen parameters are skipped
/// entirely (no moment update); missing gradients count as zero.
class AdamW {
 public:
  AdamW(const ModelState& model, AdamWHyper hyper);

  void step(ModelState& model, double lr);
  std::size_t steps() const noexcept { return t_; }
  const AdamWHyper& hyper() const noexcept { return hyper_; }
  const AdamWMoments& moments(std::size_t param_index) const { return moments_.at(param_index); }

 private:
  AdamWHyper hyper_;
  std::vector<AdamWMoments> moments_;
  std::size_t t_ = 0;
};

/// Sums trainable gradients over micro-batches in call order and writes
/// their mean back before an optimizer step.
class GradientAccumulator {
 public:
  explicit GradientAccumulator(const ModelState& model);

  void add(ModelState& model);  // also clears the model's gradient buffers
  void write_mean(ModelState& model);
  std::size_t pending() const noexcept { return count_; }

 private:
  std::vector<std::vector<double>> sums_;
  std::size_t count_ = 0;
};

/// Drives `n_micro` calls to `micro_grad(i)`, which must leave gradients on
/// the model's parameters. Every `accumulation_steps` micro-batches (and once
/// more for a trailing partial window) the mean gradient is applied with
/// lr = lr_for_step(applied_step_index). Returns the number of applied steps.
std::size_t accumulate_and_step(ModelState& model, AdamW& optimizer, std::size_t n_micro,
                                std::size_t accumulation_steps,
                                const std::function<void(std::size_t)>& micro_grad,
                                const std::function<double(std::size_t)>& lr_for_step);

}  // namespace ihb
