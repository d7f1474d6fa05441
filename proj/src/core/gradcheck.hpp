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

#include <functional>
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace ihb {

using TensorFn = std::function<Tensor(std::span<const Tensor>)>;

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares reverse-mode gradients of the scalar function `f` against central
/// differences with step `h`, coordinate by coordinate over every input.
/// The error per coordinate is |a - n| / max(1, |a|, |n|).
GradCheckResult grad_check(const TensorFn& f, std::span<const Tensor> inputs, double h = 1e-5);

inline double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& x,
                         double h = 1e-5) {
  const Tensor xs[] = {x};
  return grad_check([&](std::span<const Tensor> in) { return f(in[0]); }, xs, h).max_rel_error;
}

}  // namespace ihb
