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

namespace ihb {

/// Fixed-length padded token matrix. `valid` is false exactly at pad
/// positions; every row keeps at least its leading [CLS].
struct Batch {
  std::size_t size = 0;
  std::size_t seq_len = 0;
  std::vector<std::size_t> ids;      // size * seq_len
  std::vector<std::uint8_t> valid;   // size * seq_len
  std::vector<std::size_t> labels;   // empty or one per row

  std::span<const std::size_t> row_ids(std::size_t r) const {
    return std::span<const std::size_t>(ids).subspan(r * seq_len, seq_len);
  }
  std::span<const std::uint8_t> row_valid(std::size_t r) const {
    return std::span<const std::uint8_t>(valid).subspan(r * seq_len, seq_len);
  }
  bool has_labels() const { return !labels.empty(); }
};

}  // namespace ihb
