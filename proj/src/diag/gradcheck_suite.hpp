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

namespace ihb {

struct GradCheckRow {
  std::string op;
  std::size_t instances = 0;
  double max_rel_error = 0.0;
};

inline constexpr double kGradCheckTolerance = 1e-5;

/// Seeded random instances (extents 1..6, random key padding, kinks nudged
/// away) of every differentiable building block used by `variant`, plus the
/// normalization and loss ops shared by both variants.
std::vector<GradCheckRow> run_gradcheck_suite(Variant variant, std::uint64_t seed, std::size_t trials);

}  // namespace ihb
