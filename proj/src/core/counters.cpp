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

#include "core/counters.hpp"

#include <atomic>

#include "core/error.hpp"

namespace ihb {
namespace {
std::atomic<bool> g_enabled{true};
thread_local OpCounters* t_sink = nullptr;
}  // namespace

OpCounters& OpCounters::operator+=(const OpCounters& o) {
  mults += o.mults;
  adds_subs += o.adds_subs;
  abs_ops += o.abs_ops;
  relu_ops += o.relu_ops;
  exps += o.exps;
  divs += o.divs;
  return *this;
}

OpCounters operator-(OpCounters a, const OpCounters& b) {
  a.mults -= b.mults;
  a.adds_subs -= b.adds_subs;
  a.abs_ops -= b.abs_ops;
  a.relu_ops -= b.relu_ops;
  a.exps -= b.exps;
  a.divs -= b.divs;
  return a;
}

void set_instrumentation_enabled(bool on) noexcept { g_enabled.store(on); }
bool instrumentation_enabled() noexcept { return g_enabled.load(); }

CountingScope::CountingScope(OpCounters& sink) : previous_(t_sink) {
  if (!instrumentation_enabled()) {
    throw ContractError("op instrumentation is disabled");
  }
  t_sink = &sink;
}

CountingScope::~CountingScope() { t_sink = previous_; }

namespace count {
void mults(std::uint64_t n) noexcept {
  if (t_sink) t_sink->mults += n;
}
void adds_subs(std::uint64_t n) noexcept {
  if (t_sink) t_sink->adds_subs += n;
}
void abs_ops(std::uint64_t n) noexcept {
  if (t_sink) t_sink->abs_ops += n;
}
void relu_ops(std::uint64_t n) noexcept {
  if (t_sink) t_sink->relu_ops += n;
}
void exps(std::uint64_t n) noexcept {
  if (t_sink) t_sink->exps += n;
}
void divs(std::uint64_t n) noexcept {
  if (t_sink) t_sink->divs += n;
}
}  // namespace count

}  // namespace ihb
