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
#include <random>

#include "core/counters.hpp"
#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "core/random.hpp"
#include "oracles.hpp"

using namespace ihb;

namespace {

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("matmul identity and scalar-loop value") {
  const Tensor b = Tensor::matrix({{3, 4}, {5, 6}});
  CHECK(values(matmul(Tensor::matrix({{1, 0}, {0, 1}}), b)) == values(b));
  CHECK(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}})).item() == 11.0);
  CHECK_THROWS_AS(matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{1, 2}})), DimensionError);
}

TEST_CASE("matmul gradient is the row broadcast of column sums") {
  std::mt19937_64 eng(3);
  const Tensor a = oracle::to_tensor(oracle::random_mat(3, 4, eng));
  const Tensor b = oracle::to_tensor(oracle::random_mat(4, 2, eng));
  Tensor x = a.clone();
  x.set_requires_grad(true);
  GradTape tape;
  {
    TapeScope scope(tape);
    tape.backward(sum(matmul(x, b)));
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t k = 0; k < 4; ++k) CHECK(x.grad()[i * 4 + k] == doctest::Approx(b.at(k, 0) + b.at(k, 1)));
  const Tensor in[] = {a};
  CHECK(grad_check([&](std::span<const Tensor> t) { return sum(matmul(t[0], b)); }, in).max_rel_error < 1e-8);
}

TEST_CASE("halfrect at sign boundaries and reconstruction") {
  const Tensor x = Tensor::vector({-1, 0, 2});
  CHECK(values(halfrect(x, Sign::positive)) == std::vector<double>{0, 0, 2});
  CHECK(values(halfrect(x, Sign::negative)) == std::vector<double>{-1, 0, 0});
  const Tensor y = Tensor::vector({-3.5, 0, 7.25});
  CHECK(values(add(halfrect(y, Sign::positive), halfrect(y, Sign::negative))) == values(y));
}

TEST_CASE("abs_diff_sum values and transpose symmetry") {
  CHECK(abs_diff_sum(Tensor::matrix({{1, 2}}), Tensor::matrix({{1, 2}})).item() == 0.0);
  CHECK(values(abs_diff_sum(Tensor::matrix({{1, 0}}), Tensor::matrix({{0, 1}, {1, 0}}))) ==
        std::vector<double>{2, 0});
  std::mt19937_64 eng(11);
  const auto qm = oracle::random_mat(3, 4, eng), km = oracle::random_mat(3, 4, eng);
  const Tensor q = oracle::to_tensor(qm), k = oracle::to_tensor(km);
  const Tensor qk = abs_diff_sum(q, k), kq = abs_diff_sum(k, q);
  const auto ref = oracle::manhattan(qm, km, 2.0);  // gamma / sqrt(4) == 1
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(qk.at(i, j) == kq.at(j, i));
      CHECK(std::abs(qk.at(i, j) - ref[i][j]) < 1e-12);
    }
}

TEST_CASE("reduce_mean_axis with and without mask") {
  CHECK(reduce_mean_axis(Tensor::matrix({{2, 0}}), 1).item() == 1.0);
  CHECK(values(reduce_mean_axis(Tensor::matrix({{7, 7, 7}, {7, 7, 7}}), 1)) == std::vector<double>{7, 7});
  const Mask m = Mask::from_rows({{0, 1}});
  CHECK(reduce_mean_axis(Tensor::matrix({{5, 3}}), 1, &m).item() == 3.0);
  const Mask none = Mask::from_rows({{0, 0}});
  CHECK_THROWS_AS(reduce_mean_axis(Tensor::matrix({{5, 3}}), 1, &none), DegenerateReductionError);
}

TEST_CASE("softmax_rows examples") {
  CHECK(values(softmax_rows(Tensor::matrix({{0, 0}}))) == std::vector<double>{0.5, 0.5});
  const Mask m = Mask::from_rows({{0, 1, 0}});
  const auto one = values(softmax_rows(Tensor::matrix({{4, -2, 9}}), &m));
  CHECK(one == std::vector<double>{0, 1, 0});
  const auto w = values(softmax_rows(Tensor::matrix({{std::log(1.0), std::log(3.0)}})));
  CHECK(std::abs(w[0] - 0.25) < 1e-15);
  CHECK(std::abs(w[1] - 0.75) < 1e-15);
}

TEST_CASE("backward on linear, quadratic and reused inputs") {
  Tensor x = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  x.set_requires_grad(true);
  {
    GradTape tape;
    TapeScope scope(tape);
    tape.backward(sum(x));
  }
  for (double g : x.grad()) CHECK(g == 1.0);

  Tensor y = Tensor::vector({1, -2});
  y.set_requires_grad(true);
  {
    GradTape tape;
    TapeScope scope(tape);
    tape.backward(sum(mul(y, y)));
  }
  CHECK(values(Tensor({2}, std::vector<double>(y.grad().begin(), y.grad().end()))) == std::vector<double>{2, -4});

  Tensor z = Tensor::vector({0.5, 1.5, -1});
  z.set_requires_grad(true);
  {
    GradTape tape;
    TapeScope scope(tape);
    tape.backward(add(sum(z), sum(z)));
  }
  for (double g : z.grad()) CHECK(g == 2.0);
}

TEST_CASE("a tape sweeps once") {
  Tensor x = Tensor::vector({1, 2});
  x.set_requires_grad(true);
  GradTape tape;
  TapeScope scope(tape);
  const Tensor loss = sum(x);
  tape.backward(loss);
  CHECK_THROWS_AS(tape.backward(loss), ContractError);
}

TEST_CASE("NoGradScope records nothing") {
  Tensor x = Tensor::vector({1, 2});
  x.set_requires_grad(true);
  GradTape tape;
  TapeScope scope(tape);
  {
    NoGradScope ng;
    (void)sum(mul(x, x));
  }
  CHECK(tape.size() == 0);
}

TEST_CASE("grad_check on a quadratic") {
  const double err = grad_check([](const Tensor& x) { return sum(mul(x, x)); }, Tensor::vector({3.0}));
  CHECK(err < 1e-8);
}

TEST_CASE("non-finite values are reported") {
  const Tensor t = Tensor::vector({1.0, std::nan("")});
  CHECK_THROWS_AS(t.check_finite("probe"), NumericError);
}

TEST_CASE("counters stay zero outside a counting scope") {
  OpCounters sink;
  (void)matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  CHECK(sink == OpCounters{});
  {
    CountingScope scope(sink);
    (void)matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  }
  const OpCounters after_scope = sink;
  CHECK(after_scope.mults == 2);
  (void)matmul(Tensor::matrix({{1, 2}}), Tensor::matrix({{3}, {4}}));
  CHECK(sink == after_scope);
}

TEST_CASE("rng streams are reproducible and forks differ") {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Rng c(5);
  Rng f1 = c.fork(1), f2 = c.fork(2);
  CHECK(f1.next_u64() != f2.next_u64());
  Rng u(9);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
    CHECK(u.index(7) < 7);
  }
}

TEST_CASE("layer_norm matches the scalar formula") {
  std::mt19937_64 eng(2);
  const auto xm = oracle::random_mat(3, 5, eng, -2, 2);
  const Tensor gain = make_tensor({5}, {1.0, 0.5, 2.0, -1.0, 1.5});
  const Tensor bias = make_tensor({5}, {0.1, 0.2, 0.3, 0.4, 0.5});
  const Tensor y = layer_norm(oracle::to_tensor(xm), gain, bias);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 5; ++j)
      CHECK(std::abs(y.at(i, j) - oracle::layer_norm_row(xm[i], j, gain.at(j), bias.at(j), kLayerNormEps)) < 1e-12);
}

TEST_CASE("losses against scalar references") {
  const Tensor t = Tensor::matrix({{1, 1}});
  const Tensor s = Tensor::matrix({{0, 0}});
  CHECK(mse_loss(s, t).item() == 1.0);
  CHECK(mse_loss(t, t).item() == 0.0);
  const Tensor logits = Tensor::matrix({{std::log(1.0), std::log(3.0)}});
  const std::size_t label[] = {1};
  CHECK(std::abs(cross_entropy(logits, label).item() + std::log(0.75)) < 1e-15);
}
