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

#include <stdexcept>
#include <string>

namespace ihb {

enum class ErrorKind {
  dimension,
  contract,
  degenerate_reduction,
  numeric,
  input,
  config,
  corrupt_checkpoint,
  io,
  internal,
};

const char* to_string(ErrorKind kind) noexcept;

// Every failure raised by the library derives from Error so callers (and the
// C API boundary) can recover the category without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define IHB_DEFINE_ERROR(Name, Kind)                                   \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

IHB_DEFINE_ERROR(DimensionError, dimension)
IHB_DEFINE_ERROR(ContractError, contract)
IHB_DEFINE_ERROR(DegenerateReductionError, degenerate_reduction)
IHB_DEFINE_ERROR(NumericError, numeric)
IHB_DEFINE_ERROR(InputError, input)
IHB_DEFINE_ERROR(ConfigError, config)
IHB_DEFINE_ERROR(CorruptCheckpointError, corrupt_checkpoint)
IHB_DEFINE_ERROR(IoError, io)
IHB_DEFINE_ERROR(InternalError, internal)

#undef IHB_DEFINE_ERROR

}  // namespace ihb
