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

#include "diag/gradcheck_suite.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "core/random.hpp"

namespace ihb {

namespace {

constexpr double kKinkTol = 1e-3;
constexpr double kKinkStep = 2e-3;

Tensor random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return make_tensor({r, c}, std::move(v));
}

Tensor scalar_param(double v) { return make_tensor({1}, {v}); }

std::size_t extent(Rng& rng) { return 1 + rng.index(6); }

AttentionMask random_padding(std::size_t nq, std::size_t nk, Rng& rng) {
  std::vector<std::uint8_t> valid(nk, 1);
  for (std::size_t j = 1; j < nk; ++j) valid[j] = rng.bernoulli(0.75) ? 1 : 0;
  rng.shuffle(std::span<std::uint8_t>(valid));
  return key_padding_mask(valid, nq);
}

/// Contracts a tensor to a scalar against fixed random weights so every
/// output coordinate contributes a distinct amount to the gradient.
Tensor project(const Tensor& y, const Tensor& w) { return sum(mul(y, w)); }

struct Suite {
  Rng rng;
  std::vector<GradCheckRow> rows;

  void run(const std::string& op, std::size_t trials, const std::function<double()>& instance) {
    GradCheckRow row{op, 0, 0.0};
    for (std::size_t t = 0; t < trials; ++t) {
      row.max_rel_error = std::max(row.max_rel_error, instance());
      ++row.instances;
    }
    rows.push_back(row);
  }
};

// Center-shift kinks: shift delta until no unmasked argument is near zero.
void nudge_center_shift(const Tensor& z, Tensor& delta, const AttentionMask& mask) {
  const std::size_t nq = z.rows(), nk = z.cols();
  const auto zd = z.data();
  auto dd = delta.mutable_data();
  for (int round = 0; round < 1000; ++round) {
    bool near = false;
    for (std::size_t i = 0; i < nq && !near; ++i) {
      double total = 0.0;
      std::size_t cnt = 0;
      for (std::size_t j = 0; j < nk; ++j) {
        if (!mask.at(i, j)) continue;
        total += zd[i * nk + j];
        ++cnt;
      }
      const double mean = total / static_cast<double>(cnt);
      for (std::size_t j = 0; j < nk && !near; ++j)
        near = mask.at(i, j) && std::abs(zd[i * nk + j] - mean - dd[0]) < kKinkTol;
    }
    if (!near) return;
    dd[0] += kKinkStep;
  }
  throw InternalError("could not move center-shift inputs off their kinks");
}

// Mixing kinks: V near 0, V+ - Zbar near 0, V- + Zbar near 0.
void nudge_mix(const Tensor& zbar, Tensor& v) {
  const std::size_t nq = zbar.rows(), nk = zbar.cols(), dv = v.cols();
  const auto zd = zbar.data();
  auto vd = v.mutable_data();
  for (std::size_t j = 0; j < nk; ++j)
    for (std::size_t l = 0; l < dv; ++l)
      for (int round = 0; round < 1000; ++round) {
        const double x = vd[j * dv + l];
        bool near = std::abs(x) < kKinkTol;
        for (std::size_t i = 0; i < nq && !near; ++i) {
          const double zb = zd[i * nk + j];
          near = std::abs(std::max(x, 0.0) - zb) < kKinkTol || std::abs(std::min(x, 0.0) + zb) < kKinkTol;
        }
        if (!near) break;
        vd[j * dv + l] += kKinkStep;
      }
}

}  // namespace

std::vector<GradCheckRow> run_gradcheck_suite(Variant variant, std::uint64_t seed, std::size_t trials) {
  if (trials == 0) throw ContractError("gradcheck needs at least one trial");
  Suite s{Rng(seed), {}};
  Rng& rng = s.rng;

  if (variant == Variant::inhibitor) {
    s.run("manhattan_scores", trials, [&] {
      const std::size_t nq = extent(rng), nk = extent(rng), d = extent(rng);
      Tensor q = random_matrix(nq, d, rng), k = random_matrix(nk, d, rng), v = random_matrix(nk, 1, rng);
      Tensor gamma = scalar_param(rng.uniform(0.5, 1.5)), delta = scalar_param(0.0);
      nudge_off_kinks(q, k, v, gamma, delta, nullptr, kKinkTol, kKinkStep);
      const Tensor w = random_matrix(nq, nk, rng);
      const Tensor in[] = {q, k, gamma};
      return grad_check([&](std::span<const Tensor> x) { return project(manhattan_scores(x[0], x[1], x[2]), w); }, in)
          .max_rel_error;
    });
    s.run("center_shift", trials, [&] {
      const std::size_t nq = extent(rng), nk = extent(rng);
      const Tensor z = random_matrix(nq, nk, rng, 0.0, 3.0);
      Tensor delta = scalar_param(rng.uniform(-0.5, 0.5));
      const AttentionMask mask = random_padding(nq, nk, rng);
      nudge_center_shift(z, delta, mask);
      const Tensor w = random_matrix(nq, nk, rng);
      // The sentinel is constant, so masked entries are dropped from the projection.
      const Tensor mw = masked_fill(w, mask, 0.0);
      const Tensor in[] = {z, delta};
      return grad_check([&](std::span<const Tensor> x) { return project(center_shift(x[0], x[1], &mask), mw); }, in)
          .max_rel_error;
    });
    s.run("inhibitor_mix", trials, [&] {
      const std::size_t nq = extent(rng), nk = extent(rng), dv = extent(rng);
      Tensor zbar = random_matrix(nq, nk, rng, 0.0, 1.5);
      Tensor v = random_matrix(nk, dv, rng, -2.0, 2.0);
      nudge_mix(zbar, v);
      const Tensor eta = scalar_param(rng.uniform(0.5, 1.5));
      const Tensor w = random_matrix(nq, dv, rng);
      const Tensor in[] = {zbar, v, eta};
      return grad_check([&](std::span<const Tensor> x) { return project(inhibitor_mix(x[0], x[1], x[2]), w); }, in)
          .max_rel_error;
    });
    s.run("inhibitor_head", trials, [&] {
      const std::size_t nq = extent(rng), nk = extent(rng), d = extent(rng), dv = extent(rng);
      Tensor q = random_matrix(nq, d, rng), k = random_matrix(nk, d, rng), v = random_matrix(nk, dv, rng);
      Tensor gamma = scalar_param(rng.uniform(0.5, 1.5)), eta = scalar_param(rng.uniform(0.5, 1.5));
      Tensor delta = scalar_param(rng.uniform(-0.3, 0.3));
      const AttentionMask mask = random_padding(nq, nk, rng);
      if (!nudge_off_kinks(q, k, v, gamma, delta, &mask, kKinkTol, kKinkStep)) {
        throw InternalError("could not move head inputs off their kinks");
      }
      const Tensor w = random_matrix(nq, dv, rng);
      const Tensor in[] = {q, k, v, gamma, eta, delta};
      return grad_check(
                 [&](std::span<const Tensor> x) {
                   return project(inhibitor_attention(x[0], x[1], x[2], x[3], x[4], x[5], &mask), w);
                 },
                 in)
          .max_rel_error;
    });
  } else {
    s.run("softmax_rows", trials, [&] {
      const std::size_t nq = extent(rng), nk = extent(rng);
      const Tensor x = random_matrix(nq, nk, rng, -2.0, 2.0);
      const AttentionMask mask = random_padding(nq, nk, rng);
      const Tensor w = random_matrix(nq, nk, rng);
      const Tensor in[] = {x};
      return grad_check([&](std::span<const Tensor> a) { return project(softmax_rows(a[0], &mask), w); }, in)
          .max_rel_error;
    });
    s.run("dot_product_head", trials, [&] {
      const std::size_t nq = extent(rng), nk = extent(rng), d = extent(rng), dv = extent(rng);
      const Tensor q = random_matrix(nq, d, rng), k = random_matrix(nk, d, rng), v = random_matrix(nk, dv, rng);
      const AttentionMask mask = random_padding(nq, nk, rng);
      const Tensor w = random_matrix(nq, dv, rng);
      const Tensor in[] = {q, k, v};
      return grad_check(
                 [&](std::span<const Tensor> x) { return project(dot_product_attention(x[0], x[1], x[2], &mask), w); },
                 in)
          .max_rel_error;
    });
  }

  s.run("layer_norm", trials, [&] {
    const std::size_t n = extent(rng), d = 1 + extent(rng);
    const Tensor x = random_matrix(n, d, rng, -2.0, 2.0);
    std::vector<double> g(d), b(d);
    for (std::size_t i = 0; i < d; ++i) g[i] = rng.uniform(0.5, 1.5), b[i] = rng.uniform(-0.5, 0.5);
    const Tensor gain = make_tensor({d}, std::move(g));
    const Tensor bias = make_tensor({d}, std::move(b));
    const Tensor w = random_matrix(n, d, rng);
    const Tensor in[] = {x, gain, bias};
    return grad_check([&](std::span<const Tensor> a) { return project(layer_norm(a[0], a[1], a[2]), w); }, in)
        .max_rel_error;
  });
  s.run("mse_loss", trials, [&] {
    const std::size_t n = extent(rng), d = extent(rng);
    const Tensor pred = random_matrix(n, d, rng), target = random_matrix(n, d, rng);
    std::vector<std::uint8_t> keep(n, 1);
    for (std::size_t i = 1; i < n; ++i) keep[i] = rng.bernoulli(0.7) ? 1 : 0;
    const Tensor in[] = {pred};
    return grad_check([&](std::span<const Tensor> a) { return mse_loss(a[0], target, keep); }, in).max_rel_error;
  });
  s.run("cross_entropy", trials, [&] {
    const std::size_t b = extent(rng), c = 1 + extent(rng);
    const Tensor logits = random_matrix(b, c, rng, -3.0, 3.0);
    std::vector<std::size_t> labels(b);
    for (auto& l : labels) l = rng.index(c);
    const Tensor in[] = {logits};
    return grad_check([&](std::span<const Tensor> a) { return cross_entropy(a[0], labels); }, in).max_rel_error;
  });
  s.run("soft_distill_loss", trials, [&] {
    const std::size_t b = extent(rng), c = 1 + extent(rng);
    const Tensor teacher = random_matrix(b, c, rng, -3.0, 3.0), student = random_matrix(b, c, rng, -3.0, 3.0);
    const double t = rng.uniform(1.0, 5.0);
    const Tensor in[] = {student};
    return grad_check([&](std::span<const Tensor> a) { return soft_kl(teacher, a[0], t); }, in).max_rel_error;
  });
  return s.rows;
}

}  // namespace ihb
