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

#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace ihb {

GradCheckResult grad_check(const TensorFn& f, std::span<const Tensor> inputs, double h) {
  if (!(h > 0.0)) throw ContractError("grad_check: step must be positive");
  std::vector<Tensor> leaves;
  leaves.reserve(inputs.size());
  for (const auto& x : inputs) leaves.push_back(x.detach().set_requires_grad(true));

  std::vector<std::vector<double>> analytic;
  {
    GradTape tape;
    TapeScope scope(tape);
    const Tensor y = f(leaves);
    if (y.size() != 1) {
      throw ContractError("grad_check: function output must be scalar, got " + shape_str(y.shape()));
    }
    tape.backward(y);
  }
  for (auto& x : leaves) {
    analytic.emplace_back(x.size(), 0.0);
    if (x.has_grad()) std::copy(x.grad().begin(), x.grad().end(), analytic.back().begin());
  }

  GradCheckResult result;
  NoGradScope no_grad;
  for (std::size_t t = 0; t < leaves.size(); ++t) {
    auto data = leaves[t].mutable_data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double saved = data[i];
      data[i] = saved + h;
      const double up = f(leaves).item();
      data[i] = saved - h;
      const double down = f(leaves).item();
      data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[t][i];
      const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
      if (err > result.max_rel_error || (t == 0 && i == 0)) {
        result = {err, t, i, a, numeric};
      }
    }
  }
  return result;
}

}  // namespace ihb
