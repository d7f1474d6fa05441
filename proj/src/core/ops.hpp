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
#include <span>
#include <vector>

#include "core/tensor.hpp"

namespace ihb {

/// Boolean selector with an explicit shape; true means "participates".
struct Mask {
  Shape shape;
  std::vector<std::uint8_t> keep;

  static Mask all(Shape shape);
  static Mask from_rows(std::initializer_list<std::initializer_list<int>> rows);
  bool at(std::size_t flat) const { return keep[flat] != 0; }
  bool at(std::size_t i, std::size_t j) const { return keep[i * shape[1] + j] != 0; }
  std::size_t rows() const { return shape.at(0); }
  std::size_t cols() const { return shape.at(1); }
};

enum class Sign { positive, negative };

// --- linear algebra --------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

// --- elementwise -----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
// x * (s * c) for a one-element tensor s; one multiply per element of x.
Tensor mul_scalar(const Tensor& x, const Tensor& s, double c = 1.0);
// x + sign * s for a one-element tensor s.
Tensor add_scalar(const Tensor& x, const Tensor& s, double sign = 1.0);
Tensor add_rowvec(const Tensor& x, const Tensor& row);  // x[m,n] + row[n]
Tensor sub_colvec(const Tensor& x, const Tensor& col);  // x[m,n] - col[m]
Tensor halfrect(const Tensor& x, Sign sign);             // max(x,0) / min(x,0)
Tensor gelu(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor masked_fill(const Tensor& x, const Mask& mask, double value);
// y = x * keep * factor; keep has one entry per element of x.
Tensor apply_keep_mask(const Tensor& x, std::span<const std::uint8_t> keep, double factor);

// --- reductions ------------------------------------------------------------

/// out[i][j] = sum_k |q[i][k] - k[j][k]|.
Tensor abs_diff_sum(const Tensor& q, const Tensor& k);
/// Mean over `axis`, restricted to entries where `mask` (same shape as x) is
/// true. The reduced axis is removed; a rank-1 input yields shape [1].
Tensor reduce_mean_axis(const Tensor& x, std::size_t axis, const Mask* mask = nullptr);
/// Row softmax with row-max stabilization; masked entries get weight 0.
Tensor softmax_rows(const Tensor& s, const Mask* mask = nullptr);
Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
Tensor add_n(std::span<const Tensor> xs);

// --- structure -------------------------------------------------------------

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);

// --- normalization ---------------------------------------------------------

inline constexpr double kLayerNormEps = 1e-12;
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = kLayerNormEps);

// --- losses (targets / teachers are never differentiated) ------------------

/// Mean squared error over the rows selected by `row_keep` (all rows when
/// empty) and every column.
Tensor mse_loss(const Tensor& pred, const Tensor& target,
                std::span<const std::uint8_t> row_keep = {});
/// Mean over rows of -log softmax(logits)[label].
Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);
/// T^2 * KL(softmax(teacher/T) || softmax(student/T)), mean over rows.
Tensor soft_kl(const Tensor& teacher_logits, const Tensor& student_logits, double temperature);

}  // namespace ihb
