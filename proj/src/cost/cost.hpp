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

#include "attention/attention.hpp"
#include "core/counters.hpp"

namespace ihb {

struct HeadShape {
  std::size_t n_q = 1, n_k = 1, d = 1, d_v = 1;
  friend bool operator==(const HeadShape&, const HeadShape&) = default;
};

/// Scalar operations of one unmasked attention head forward pass.
///
/// inhibitor:
///   mults     = n_q*n_k (scaled distances) + n_q*d_v (eta)
///   adds_subs = n_q*n_k*d (differences) + n_q*n_k*(d-1) (distance sums)
///             + n_q*(n_k-1) (row sums for the mean) + 2*n_q*n_k (centre, delta)
///             + n_q*d_v*(2*n_k) (V+ - Z, V- + Z) + n_q*d_v*(2*n_k-1) (key sum)
///   abs_ops   = n_q*n_k*d
///   relu_ops  = n_q*n_k (shifted score) + 2*n_k*d_v (V+, V-) + 2*n_q*n_k*d_v
///   exps = 0, divs = n_q (row means)
///
/// dot_product:
///   mults     = n_q*n_k*d (scores) + n_q*n_k (1/sqrt(d)) + n_q*n_k*d_v (mix)
///   adds_subs = n_q*n_k*(d-1) + n_q*n_k (max shift) + n_q*(n_k-1) (normalizer)
///             + n_q*d_v*(n_k-1)
///   exps = n_q*n_k, divs = n_q*n_k (normalization), abs_ops = relu_ops = 0
OpCounters closed_form_counts(Variant variant, const HeadShape& shape);

/// Runs one seeded forward pass of a head under a CountingScope. Throws
/// ContractError when instrumentation is globally disabled.
OpCounters instrumented_counts(Variant variant, const HeadShape& shape, std::uint64_t seed);

struct CostRow {
  HeadShape shape;
  OpCounters inhibitor, dot_product;
  double mult_ratio() const;  // dot_product mults / inhibitor mults
};

std::vector<CostRow> compare_report(const std::vector<HeadShape>& grid);

/// 2..64 sweeps plus the full-scale head (n = 512, d = d_v = 64).
std::vector<HeadShape> default_grid();

/// Comma- or semicolon-separated "n=..,d=..,dv=.." tuples; `n` sets both
/// n_q and n_k, `nq`/`nk` override. Throws ConfigError on bad syntax.
std::vector<HeadShape> parse_grid(const std::string& text);

inline constexpr const char* kCostCsvHeader = "variant,n_q,n_k,d,d_v,mults,adds_subs,abs_ops,relu_ops,exps,divs";

std::string cost_csv(const std::vector<CostRow>& rows);
std::string cost_table(const std::vector<CostRow>& rows);
/// Inverse of cost_csv (rows come back paired by shape).
std::vector<CostRow> parse_cost_csv(const std::string& csv);

}  // namespace ihb
