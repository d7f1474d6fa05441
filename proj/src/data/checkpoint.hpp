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

#include "model/encoder.hpp"

namespace ihb {

// Layout: "IHBT" | u32 version | u64 manifest bytes | u32 manifest CRC32 |
// UTF-8 JSON manifest |
// zero padding to a 64-byte boundary | little-endian f64 blob.
// All integers are little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kBlobAlignment = 64;

struct TensorRecord {
  std::string name;
  Shape shape;
  std::uint64_t offset = 0;  // relative to blob start
  std::uint64_t nbytes = 0;
  std::uint32_t crc32 = 0;
};

struct CheckpointInfo {
  std::uint32_t version = 0;
  EncoderConfig config;
  std::vector<TensorRecord> tensors;
  std::uint64_t blob_offset = 0;
};

/// Written to a temporary sibling and renamed into place.
void save_checkpoint(const ModelState& state, const std::string& path);
/// Verifies magic, version, tensor table against the config census, and
/// per-tensor CRC32 before returning. Failures raise CorruptCheckpointError.
ModelState load_checkpoint(const std::string& path);
/// Header and manifest only; payload checksums are not verified.
CheckpointInfo inspect_checkpoint(const std::string& path);

std::uint32_t crc32_of(const void* data, std::size_t n);

}  // namespace ihb
