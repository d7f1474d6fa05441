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

#include <cstdint>
#include <string_view>
#include <vector>

#include "core/ops.hpp"
#include "core/random.hpp"
#include "core/tensor.hpp"

namespace ihb {

enum class Variant { inhibitor, dot_product };

const char* to_string(Variant v) noexcept;
Variant parse_variant(std::string_view name);

/// [n_queries x n_keys] attend flags. Every query row must keep >= 1 key.
using AttentionMask = Mask;

AttentionMask key_padding_mask(std::span<const std::uint8_t> key_valid, std::size_t n_queries);
void validate_attention_mask(const AttentionMask& mask, std::size_t n_q, std::size_t n_k);

// Masked entries of the shifted score are pinned here; both rectified terms of
// the mixing sum vanish for any |V| below it.
inline constexpr double kMaskSentinel = 1e9;

/// Per-(query, key) keep flags drawn for attention dropout, with the
/// 1/(1-p) rescale applied to kept entries.
struct AttentionDropout {
  std::vector<std::uint8_t> keep;  // n_q * n_k
  double factor = 1.0;
};
AttentionDropout draw_attention_dropout(std::size_t n_q, std::size_t n_k, double rate, Rng& rng);

// --- inhibitor head ---------------------------------------------------------

/// Z = (gamma / sqrt(d)) * sum_k |Q_ik - K_jk|, with the scale folded into one
/// multiply per score entry.
Tensor manhattan_scores(const Tensor& q, const Tensor& k, const Tensor& gamma);

/// Zbar = (Z - mean_j Z - delta)^+ with the mean over unmasked keys; masked
/// entries are set to kMaskSentinel.
Tensor center_shift(const Tensor& z, const Tensor& delta, const AttentionMask* mask = nullptr);

/// H'_il = eta * sum_j ((V+_jl - Zbar_ij)^+ + (V-_jl + Zbar_ij)^-).
/// With dropout, each j-summand is kept or zeroed per (i, j) before the sum.
Tensor inhibitor_mix(const Tensor& zbar, const Tensor& v, const Tensor& eta,
                     const AttentionDropout* dropout = nullptr);

Tensor inhibitor_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& gamma,
                           const Tensor& eta, const Tensor& delta,
                           const AttentionMask* mask = nullptr,
                           const AttentionDropout* dropout = nullptr);

// --- baseline ---------------------------------------------------------------

Tensor dot_product_weights(const Tensor& q, const Tensor& k, const AttentionMask* mask = nullptr);
Tensor dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             const AttentionMask* mask = nullptr,
                             const AttentionDropout* dropout = nullptr);

// --- multi-head -------------------------------------------------------------

inline constexpr double kInitGamma = 1.0;
inline constexpr double kInitEta = 1.0;
inline constexpr double kInitDelta = 0.0;

/// Projections and per-head scalars of one attention sublayer.
struct HeadParams {
  std::vector<Tensor> w_q, w_k, w_v;  // per head, [d_model x d_head]
  Tensor w_o;                         // [n_heads * d_head x d_model]
  std::vector<Tensor> gamma, eta, delta;  // per head, shape [1]

  std::size_t n_heads() const { return w_q.size(); }
  std::size_t d_model() const { return w_q.at(0).rows(); }
  std::size_t d_head() const { return w_q.at(0).cols(); }

  static HeadParams init(std::size_t d_model, std::size_t n_heads, std::size_t d_head,
                         double init_std, Rng& rng, double eta_init = kInitEta);
  void reset_scalars(double eta_init = kInitEta);
  void validate() const;
};

Tensor multi_head_forward(const Tensor& x, const HeadParams& params, const AttentionMask* mask,
                          Variant variant, double attention_dropout = 0.0, Rng* rng = nullptr);

// --- gradient-check support -------------------------------------------------

/// Moves inputs of an inhibitor head away from every non-differentiable point
/// of |.| and the rectifiers: any kink argument within `tol` of zero has the
/// responsible coordinate (Q, V, or delta) shifted by `step`. Returns false if
/// the inputs are still near a kink after `max_rounds`.
bool nudge_off_kinks(Tensor& q, Tensor& k, Tensor& v, const Tensor& gamma, Tensor& delta,
                     const AttentionMask* mask = nullptr, double tol = 1e-3, double step = 2e-3,
                     int max_rounds = 500);

}  // namespace ihb
