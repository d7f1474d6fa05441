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

namespace ihb {

/// Tallies of scalar arithmetic by kind. Only per-element work is counted;
/// preparing a per-head scalar (e.g. folding gamma with 1/sqrt(d)) is not.
/// Comparisons inside max-reductions are outside the taxonomy.
struct OpCounters {
  std::uint64_t mults = 0;
  std::uint64_t adds_subs = 0;
  std::uint64_t abs_ops = 0;
  std::uint64_t relu_ops = 0;
  std::uint64_t exps = 0;
  std::uint64_t divs = 0;

  OpCounters& operator+=(const OpCounters& o);
  friend OpCounters operator-(OpCounters a, const OpCounters& b);
  friend bool operator==(const OpCounters&, const OpCounters&) = default;
};

// Process-wide switch; when off, CountingScope refuses to open.
void set_instrumentation_enabled(bool on) noexcept;
bool instrumentation_enabled() noexcept;

/// Routes counts from forward primitives executed on this thread into
/// `sink` for the lifetime of the scope. Scopes nest; the innermost wins.
class CountingScope {
 public:
  explicit CountingScope(OpCounters& sink);
  ~CountingScope();
  CountingScope(const CountingScope&) = delete;
  CountingScope& operator=(const CountingScope&) = delete;

 private:
  OpCounters* previous_;
};

namespace count {
void mults(std::uint64_t n) noexcept;
void adds_subs(std::uint64_t n) noexcept;
void abs_ops(std::uint64_t n) noexcept;
void relu_ops(std::uint64_t n) noexcept;
void exps(std::uint64_t n) noexcept;
void divs(std::uint64_t n) noexcept;
}  // namespace count

}  // namespace ihb
