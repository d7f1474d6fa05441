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

#include "optim/optim.hpp"

#include <cmath>
#include <numbers>

#include "core/error.hpp"

namespace ihb {

const char* to_string(Decay d) noexcept { return d == Decay::cosine ? "cosine" : "linear"; }

Decay parse_decay(std::string_view name) {
  if (name == "cosine") return Decay::cosine;
  if (name == "linear") return Decay::linear;
  throw ContractError("unknown learning-rate decay '" + std::string(name) + "'");
}

std::size_t LrSchedule::warmup_steps() const {
  // The epsilon keeps 0.05 * 100 from landing on 4.999... after rounding.
  return static_cast<std::size_t>(std::floor(warmup_ratio * static_cast<double>(total_steps) + 1e-9));
}

void LrSchedule::validate() const {
  if (!(warmup_ratio >= 0.0 && warmup_ratio < 1.0)) {
    throw ContractError("warmup_ratio must lie in [0,1)");
  }
  if (peak_lr < 0.0) throw ContractError("peak_lr must be non-negative");
  if (total_steps == 0) throw ContractError("schedule needs at least one step");
}

double lr_at(std::size_t step, const LrSchedule& s) {
  s.validate();
  if (step > s.total_steps) {
    throw ContractError("lr_at: step " + std::to_string(step) + " beyond total_steps " +
                        std::to_string(s.total_steps));
  }
  const std::size_t w = s.warmup_steps();
  if (step < w) return s.peak_lr * static_cast<double>(step) / static_cast<double>(w);
  if (s.total_steps == w) return s.peak_lr;
  const double progress = static_cast<double>(step - w) / static_cast<double>(s.total_steps - w);
  if (s.decay == Decay::cosine) {
    return s.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  }
  return s.peak_lr * (1.0 - progress);
}

void adamw_step(std::span<double> p, std::span<const double> g, AdamWMoments& st, double lr,
                const AdamWHyper& h, bool apply_decay) {
  if (!g.empty() && g.size() != p.size()) {
    throw ContractError("adamw_step: gradient has " + std::to_string(g.size()) +
                        " entries for a parameter of " + std::to_string(p.size()));
  }
  if (lr < 0.0) throw ContractError("adamw_step: negative learning rate");
  if (st.m.empty()) {
    st.m.assign(p.size(), 0.0);
    st.v.assign(p.size(), 0.0);
  }
  if (st.m.size() != p.size()) throw ContractError("adamw_step: moment shape mismatch");
  st.t += 1;
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(st.t));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(st.t));
  const double wd = apply_decay ? h.weight_decay : 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double gi = g.empty() ? 0.0 : g[i];
    st.m[i] = h.beta1 * st.m[i] + (1.0 - h.beta1) * gi;
    st.v[i] = h.beta2 * st.v[i] + (1.0 - h.beta2) * gi * gi;
    const double mhat = st.m[i] / bc1;
    const double vhat = st.v[i] / bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + h.eps) + wd * p[i]);
  }
}

AdamW::AdamW(const ModelState& model, AdamWHyper hyper)
    : hyper_(hyper), moments_(model.parameters().size()) {}

void AdamW::step(ModelState& model, double lr) {
  auto& params = model.parameters();
  if (params.size() != moments_.size()) throw ContractError("optimizer bound to a different model");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    const std::span<const double> g = p.tensor.has_grad() ? p.tensor.grad() : std::span<const double>{};
    adamw_step(p.tensor.mutable_data(), g, moments_[i], lr, hyper_, decays(p.role));
  }
  ++t_;
}

GradientAccumulator::GradientAccumulator(const ModelState& model)
    : sums_(model.parameters().size()) {}

void GradientAccumulator::add(ModelState& model) {
  auto& params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (!p.trainable) continue;
    if (sums_[i].empty()) sums_[i].assign(p.tensor.size(), 0.0);
    if (p.tensor.has_grad()) {
      const auto g = p.tensor.grad();
      for (std::size_t k = 0; k < g.size(); ++k) sums_[i][k] += g[k];
    }
    p.tensor.clear_grad();
  }
  ++count_;
}

void GradientAccumulator::write_mean(ModelState& model) {
  if (count_ == 0) throw ContractError("no accumulated gradients to average");
  auto& params = model.parameters();
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable || sums_[i].empty()) continue;
    auto g = params[i].tensor.mutable_grad();
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = sums_[i][k] * inv;
    std::fill(sums_[i].begin(), sums_[i].end(), 0.0);
  }
  count_ = 0;
}

std::size_t accumulate_and_step(ModelState& model, AdamW& optimizer, std::size_t n_micro,
                                std::size_t accumulation_steps,
                                const std::function<void(std::size_t)>& micro_grad,
                                const std::function<double(std::size_t)>& lr_for_step) {
  if (accumulation_steps == 0) throw ContractError("accumulation_steps must be >= 1");
  GradientAccumulator acc(model);
  std::size_t applied = 0;
  auto apply = [&] {
    acc.write_mean(model);
    optimizer.step(model, lr_for_step(applied));
    model.clear_grads();
    ++applied;
  };
  model.clear_grads();
  for (std::size_t i = 0; i < n_micro; ++i) {
    micro_grad(i);
    acc.add(model);
    if (acc.pending() == accumulation_steps) apply();
  }
  if (acc.pending() > 0) apply();
  return applied;
}

}  // namespace ihb
