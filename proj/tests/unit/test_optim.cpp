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

#include <doctest.h>

#include <cmath>
#include <cstring>

#include "core/error.hpp"
#include "distill/distill.hpp"
#include "optim/optim.hpp"
#include "oracles.hpp"

using namespace ihb;

namespace {

double single_update(double p, double g, double lr, double wd) {
  double x[] = {p};
  const double gr[] = {g};
  AdamWMoments st;
  adamw_step(x, gr, st, lr, AdamWHyper{0.9, 0.999, 1e-8, wd}, true);
  return x[0];
}

Tensor row_loss(const ModelState& m, const std::vector<std::size_t>& ids) {
  const std::vector<std::uint8_t> valid(ids.size(), 1);
  const auto out = forward_sequence(m, ids, valid, {});
  return mean(mul(out.hiddens.back(), out.hiddens.back()));
}

Tensor mean_of(const ModelState& m, const std::vector<std::vector<std::size_t>>& rows) {
  std::vector<Tensor> parts;
  for (const auto& r : rows) parts.push_back(row_loss(m, r));
  return scale(add_n(parts), 1.0 / static_cast<double>(rows.size()));
}

}  // namespace

TEST_CASE("adamw single-step hand example") {
  CHECK(std::abs(single_update(1.0, 0.5, 0.1, 0.0) - 0.900000002) <= 1e-12);
  oracle::AdamScalar ref;
  CHECK(std::abs(single_update(1.0, 0.5, 0.1, 0.0) - ref.step(1.0, 0.5, 0.1, 0.9, 0.999, 1e-8, 0.0)) <= 1e-15);
}

TEST_CASE("adamw null step and decoupled decay") {
  CHECK(single_update(0.75, 0.0, 0.1, 0.0) == 0.75);
  CHECK(std::abs(single_update(2.0, 0.0, 0.1, 0.1) - 2.0 * 0.99) <= 1e-15);
  double x[] = {1.0};
  const double gr[] = {1.0, 2.0};
  AdamWMoments st;
  CHECK_THROWS_AS(adamw_step(x, gr, st, 0.1, {}, false), ContractError);
}

TEST_CASE("adamw multi-step matches the scalar recurrence") {
  double x[] = {0.3};
  AdamWMoments st;
  oracle::AdamScalar ref;
  double p = 0.3;
  const AdamWHyper h{0.9, 0.999, 1e-8, 0.01};
  for (int t = 0; t < 25; ++t) {
    const double g = std::sin(0.7 * t) + 0.2;
    const double gr[] = {g};
    adamw_step(x, gr, st, 1e-2, h, true);
    p = ref.step(p, g, 1e-2, h.beta1, h.beta2, h.eps, h.weight_decay);
    CHECK(std::abs(x[0] - p) <= 1e-12);
  }
  CHECK(st.t == 25);
}

TEST_CASE("lr schedule endpoints and midpoint") {
  LrSchedule s{5e-4, 0.05, 100, Decay::cosine};
  CHECK(s.warmup_steps() == 5);
  CHECK(lr_at(0, s) == 0.0);
  CHECK(lr_at(5, s) == 5e-4);
  CHECK(lr_at(100, s) == 0.0);
  s.decay = Decay::linear;
  CHECK(lr_at(100, s) == 0.0);
  const LrSchedule mid{5e-4, 5.0 / 105.0, 105, Decay::cosine};
  CHECK(mid.warmup_steps() == 5);
  CHECK(lr_at(55, mid) == 2.5e-4);
  const LrSchedule lin{2e-5, 0.0, 10, Decay::linear};
  CHECK(lr_at(0, lin) == 2e-5);
  CHECK(lr_at(5, lin) == 1e-5);
  CHECK_THROWS_AS(lr_at(101, s), ContractError);
  CHECK_THROWS_AS(lr_at(0, LrSchedule{1e-3, 1.0, 10, Decay::cosine}), ContractError);
}

TEST_CASE("accumulation over two micro-batches equals one merged step") {
  const EncoderConfig cfg = EncoderConfig::desk();
  const std::vector<std::vector<std::size_t>> a = {{2, 10, 11, 12}, {2, 40, 41, 7}};
  const std::vector<std::vector<std::size_t>> b = {{2, 100, 9, 200}, {2, 5, 6, 250}};

  ModelState acc = ModelState::init(cfg, 4);
  AdamW opt_acc(acc, AdamWHyper{});
  const std::vector<std::vector<std::vector<std::size_t>>> micro = {a, b};
  const auto applied = accumulate_and_step(
      acc, opt_acc, 2, 2,
      [&](std::size_t i) {
        GradTape tape;
        TapeScope scope(tape);
        tape.backward(mean_of(acc, micro[i]));
      },
      [](std::size_t) { return 1e-3; });
  CHECK(applied == 1);

  ModelState merged = ModelState::init(cfg, 4);
  AdamW opt_merged(merged, AdamWHyper{});
  {
    GradTape tape;
    TapeScope scope(tape);
    auto rows = a;
    rows.insert(rows.end(), b.begin(), b.end());
    tape.backward(mean_of(merged, rows));
  }
  opt_merged.step(merged, 1e-3);

  double worst = 0.0;
  for (std::size_t i = 0; i < acc.parameters().size(); ++i) {
    const auto x = acc.parameters()[i].tensor.data();
    const auto y = merged.parameters()[i].tensor.data();
    for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("accumulation 1 is a plain step and identical windows average to one") {
  const EncoderConfig cfg = EncoderConfig::desk();
  const std::vector<std::vector<std::size_t>> a = {{2, 10, 11, 12}};

  ModelState plain = ModelState::init(cfg, 6);
  AdamW op(plain, AdamWHyper{});
  {
    GradTape tape;
    TapeScope scope(tape);
    tape.backward(mean_of(plain, a));
  }
  op.step(plain, 1e-3);

  for (std::size_t window : {1u, 4u}) {
    ModelState m = ModelState::init(cfg, 6);
    AdamW o(m, AdamWHyper{});
    accumulate_and_step(
        m, o, window, window,
        [&](std::size_t) {
          GradTape tape;
          TapeScope scope(tape);
          tape.backward(mean_of(m, a));
        },
        [](std::size_t) { return 1e-3; });
    double worst = 0.0;
    for (std::size_t i = 0; i < m.parameters().size(); ++i) {
      const auto x = m.parameters()[i].tensor.data();
      const auto y = plain.parameters()[i].tensor.data();
      for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
    }
    if (window == 1) {
      CHECK(worst == 0.0);
    } else {
      CHECK(worst <= 1e-12);
    }
  }
}

TEST_CASE("trailing partial windows still step") {
  ModelState m = ModelState::init(EncoderConfig::desk(), 1);
  AdamW o(m, AdamWHyper{});
  std::vector<std::size_t> lr_steps;
  const auto applied = accumulate_and_step(
      m, o, 5, 2,
      [&](std::size_t) {
        GradTape tape;
        TapeScope scope(tape);
        tape.backward(row_loss(m, {2, 30, 31}));
      },
      [&](std::size_t s) {
        lr_steps.push_back(s);
        return 1e-3;
      });
  CHECK(applied == 3);
  CHECK(lr_steps == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("frozen parameters keep their bits and their moments") {
  ModelState m = ModelState::init(EncoderConfig::desk(), 3);
  set_trainable(m, TrainableSelector::qkv_of_layer(0));
  const ModelState before = m.clone();
  AdamW o(m, AdamWHyper{});
  {
    GradTape tape;
    TapeScope scope(tape);
    tape.backward(row_loss(m, {2, 30, 31}));
  }
  o.step(m, 1e-2);
  for (const auto& name : changed_parameters(before, m)) CHECK(name.rfind("layer.0.attention.head.", 0) == 0);
  for (std::size_t i = 0; i < m.parameters().size(); ++i) {
    if (!m.parameters()[i].trainable) CHECK(o.moments(i).t == 0);
  }
}
