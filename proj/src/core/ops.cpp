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

#include "core/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "core/counters.hpp"
#include "core/error.hpp"

namespace ihb {
namespace {

std::span<double> gbuf(const Tensor& t) { return detail::grad_buffer(*t.node()); }
std::span<const double> gout(const Tensor& t) { return t.node()->grad; }

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
  }
}

void require_scalar(const Tensor& s, const char* op) {
  if (s.size() != 1) {
    throw DimensionError(std::string(op) + ": expected a one-element tensor, got " +
                         shape_str(s.shape()));
  }
}

void require_mask(const Mask& m, const Shape& shape, const char* op) {
  if (m.shape != shape || m.keep.size() != shape_size(shape)) {
    throw DimensionError(std::string(op) + ": mask shape " + shape_str(m.shape) +
                         " does not match " + shape_str(shape));
  }
}

// Elementwise unary op with derivative computed from (x, y).
template <class F, class D>
Tensor unary(const Tensor& x, F f, D dfdx) {
  const auto xd = x.data();
  std::vector<double> y(xd.size());
  for (std::size_t i = 0; i < xd.size(); ++i) y[i] = f(xd[i]);
  Tensor out = make_tensor(x.shape(), std::move(y));
  if (detail::needs_grad({&x})) {
    detail::record({&x}, out, [x, out, dfdx] {
      const auto g = gout(out);
      const auto xd = x.data();
      const auto yd = out.data();
      auto gx = gbuf(x);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * dfdx(xd[i], yd[i]);
    });
  }
  return out;
}

}  // namespace

Mask Mask::all(Shape shape) {
  const auto n = shape_size(shape);
  return Mask{std::move(shape), std::vector<std::uint8_t>(n, 1)};
}

Mask Mask::from_rows(std::initializer_list<std::initializer_list<int>> rows) {
  Mask m;
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  m.shape = {r, c};
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged mask literal");
    for (int v : row) m.keep.push_back(v ? 1 : 0);
  }
  return m;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner extents disagree, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  }
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = ad[i * k] * bd[j];
      for (std::size_t p = 1; p < k; ++p) acc += ad[i * k + p] * bd[p * n + j];
      c[i * n + j] = acc;
    }
  }
  count::mults(m * n * k);
  count::adds_subs(m * n * (k - 1));
  Tensor out = make_tensor({m, n}, std::move(c));
  if (detail::needs_grad({&a, &b})) {
    detail::record({&a, &b}, out, [a, b, out, m, k, n] {
      const auto g = gout(out);
      const auto ad = a.data();
      const auto bd = b.data();
      if (a.requires_grad()) {
        auto ga = gbuf(a);  // dA = dC * B^T
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * bd[p * n + j];
            ga[i * k + p] += acc;
          }
      }
      if (b.requires_grad()) {
        auto gb = gbuf(b);  // dB = A^T * dC
        for (std::size_t p = 0; p < k; ++p)
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += ad[i * k + p] * g[i * n + j];
            gb[p * n + j] += acc;
          }
      }
    });
  }
  return out;
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  const std::size_t m = a.rows(), n = a.cols();
  const auto ad = a.data();
  std::vector<double> t(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) t[j * m + i] = ad[i * n + j];
  Tensor out = make_tensor({n, m}, std::move(t));
  if (detail::needs_grad({&a})) {
    detail::record({&a}, out, [a, out, m, n] {
      const auto g = gout(out);
      auto ga = gbuf(a);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    });
  }
  return out;
}

namespace {
Tensor add_like(const Tensor& a, const Tensor& b, double sign, const char* op) {
  require_same_shape(a, b, op);
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> c(ad.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = ad[i] + sign * bd[i];
  count::adds_subs(c.size());
  Tensor out = make_tensor(a.shape(), std::move(c));
  if (detail::needs_grad({&a, &b})) {
    detail::record({&a, &b}, out, [a, b, out, sign] {
      const auto g = gout(out);
      if (a.requires_grad()) {
        auto ga = gbuf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (b.requires_grad()) {
        auto gb = gbuf(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += sign * g[i];
      }
    });
  }
  return out;
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_like(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_like(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto ad = a.data();
  const auto bd = b.data();
  std::vector<double> c(ad.size());
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = ad[i] * bd[i];
  count::mults(c.size());
  Tensor out = make_tensor(a.shape(), std::move(c));
  if (detail::needs_grad({&a, &b})) {
    detail::record({&a, &b}, out, [a, b, out] {
      const auto g = gout(out);
      const auto ad = a.data();
      const auto bd = b.data();
      if (a.requires_grad()) {
        auto ga = gbuf(a);
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bd[i];
      }
      if (b.requires_grad()) {
        auto gb = gbuf(b);
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ad[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double c) {
  count::mults(x.size());
  return unary(x, [c](double v) { return v * c; }, [c](double, double) { return c; });
}

Tensor mul_scalar(const Tensor& x, const Tensor& s, double c) {
  require_scalar(s, "mul_scalar");
  const double factor = s.item() * c;
  const auto xd = x.data();
  std::vector<double> y(xd.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xd[i] * factor;
  count::mults(y.size());
  Tensor out = make_tensor(x.shape(), std::move(y));
  if (detail::needs_grad({&x, &s})) {
    detail::record({&x, &s}, out, [x, s, out, c, factor] {
      const auto g = gout(out);
      const auto xd = x.data();
      if (x.requires_grad()) {
        auto gx = gbuf(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * factor;
      }
      if (s.requires_grad()) {
        double acc = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) acc += g[i] * xd[i];
        gbuf(s)[0] += acc * c;
      }
    });
  }
  return out;
}

Tensor add_scalar(const Tensor& x, const Tensor& s, double sign) {
  require_scalar(s, "add_scalar");
  const double shift = sign * s.item();
  const auto xd = x.data();
  std::vector<double> y(xd.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = xd[i] + shift;
  count::adds_subs(y.size());
  Tensor out = make_tensor(x.shape(), std::move(y));
  if (detail::needs_grad({&x, &s})) {
    detail::record({&x, &s}, out, [x, s, out, sign] {
      const auto g = gout(out);
      if (x.requires_grad()) {
        auto gx = gbuf(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (s.requires_grad()) {
        double acc = 0.0;
        for (double v : g) acc += v;
        gbuf(s)[0] += sign * acc;
      }
    });
  }
  return out;
}

Tensor add_rowvec(const Tensor& x, const Tensor& row) {
  require_rank2(x, "add_rowvec");
  const std::size_t m = x.rows(), n = x.cols();
  if (row.size() != n) {
    throw DimensionError("add_rowvec: " + shape_str(x.shape()) + " + " + shape_str(row.shape()));
  }
  const auto xd = x.data();
  const auto rd = row.data();
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = xd[i * n + j] + rd[j];
  count::adds_subs(m * n);
  Tensor out = make_tensor({m, n}, std::move(y));
  if (detail::needs_grad({&x, &row})) {
    detail::record({&x, &row}, out, [x, row, out, m, n] {
      const auto g = gout(out);
      if (x.requires_grad()) {
        auto gx = gbuf(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (row.requires_grad()) {
        auto gr = gbuf(row);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gr[j] += g[i * n + j];
      }
    });
  }
  return out;
}

Tensor sub_colvec(const Tensor& x, const Tensor& col) {
  require_rank2(x, "sub_colvec");
  const std::size_t m = x.rows(), n = x.cols();
  if (col.size() != m) {
    throw DimensionError("sub_colvec: " + shape_str(x.shape()) + " - " + shape_str(col.shape()));
  }
  const auto xd = x.data();
  const auto cd = col.data();
  std::vector<double> y(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] = xd[i * n + j] - cd[i];
  count::adds_subs(m * n);
  Tensor out = make_tensor({m, n}, std::move(y));
  if (detail::needs_grad({&x, &col})) {
    detail::record({&x, &col}, out, [x, col, out, m, n] {
      const auto g = gout(out);
      if (x.requires_grad()) {
        auto gx = gbuf(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (col.requires_grad()) {
        auto gc = gbuf(col);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gc[i] -= g[i * n + j];
      }
    });
  }
  return out;
}

Tensor halfrect(const Tensor& x, Sign sign) {
  count::relu_ops(x.size());
  if (sign == Sign::positive) {
    return unary(x, [](double v) { return v > 0.0 ? v : 0.0; },
                 [](double v, double) { return v > 0.0 ? 1.0 : 0.0; });
  }
  return unary(x, [](double v) { return v < 0.0 ? v : 0.0; },
               [](double v, double) { return v < 0.0 ? 1.0 : 0.0; });
}

Tensor gelu(const Tensor& x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  constexpr double inv_sqrt_2pi = 0.39894228040143267794;
  return unary(
      x, [](double v) { return 0.5 * v * (1.0 + std::erf(v * inv_sqrt2)); },
      [](double v, double) {
        return 0.5 * (1.0 + std::erf(v * inv_sqrt2)) + v * inv_sqrt_2pi * std::exp(-0.5 * v * v);
      });
}

Tensor tanh(const Tensor& x) {
  return unary(x, [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Tensor masked_fill(const Tensor& x, const Mask& mask, double value) {
  require_mask(mask, x.shape(), "masked_fill");
  const auto xd = x.data();
  std::vector<double> y(xd.begin(), xd.end());
  for (std::size_t i = 0; i < y.size(); ++i)
    if (!mask.at(i)) y[i] = value;
  Tensor out = make_tensor(x.shape(), std::move(y));
  if (detail::needs_grad({&x})) {
    detail::record({&x}, out, [x, out, keep = mask.keep] {
      const auto g = gout(out);
      auto gx = gbuf(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (keep[i]) gx[i] += g[i];
    });
  }
  return out;
}

Tensor apply_keep_mask(const Tensor& x, std::span<const std::uint8_t> keep, double factor) {
  if (keep.size() != x.size()) {
    throw DimensionError("apply_keep_mask: " + std::to_string(keep.size()) +
                         " keep flags for tensor " + shape_str(x.shape()));
  }
  const auto xd = x.data();
  std::vector<double> y(xd.size());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = keep[i] ? xd[i] * factor : 0.0;
  Tensor out = make_tensor(x.shape(), std::move(y));
  if (detail::needs_grad({&x})) {
    detail::record({&x}, out, [x, out, flags = std::vector<std::uint8_t>(keep.begin(), keep.end()),
                               factor] {
      const auto g = gout(out);
      auto gx = gbuf(x);
      for (std::size_t i = 0; i < g.size(); ++i)
        if (flags[i]) gx[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor abs_diff_sum(const Tensor& q, const Tensor& k) {
  require_rank2(q, "abs_diff_sum");
  require_rank2(k, "abs_diff_sum");
  const std::size_t m = q.rows(), n = k.rows(), d = q.cols();
  if (k.cols() != d) {
    throw DimensionError("abs_diff_sum: trailing extents disagree, " + shape_str(q.shape()) +
                         " vs " + shape_str(k.shape()));
  }
  const auto qd = q.data();
  const auto kd = k.data();
  std::vector<double> z(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = std::abs(qd[i * d] - kd[j * d]);
      for (std::size_t p = 1; p < d; ++p) acc += std::abs(qd[i * d + p] - kd[j * d + p]);
      z[i * n + j] = acc;
    }
  count::adds_subs(m * n * d + m * n * (d - 1));
  count::abs_ops(m * n * d);
  Tensor out = make_tensor({m, n}, std::move(z));
  if (detail::needs_grad({&q, &k})) {
    detail::record({&q, &k}, out, [q, k, out, m, n, d] {
      const auto g = gout(out);
      const auto qd = q.data();
      const auto kd = k.data();
      const bool want_q = q.requires_grad(), want_k = k.requires_grad();
      std::span<double> gq, gk;
      if (want_q) gq = gbuf(q);
      if (want_k) gk = gbuf(k);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = g[i * n + j];
          if (gij == 0.0) continue;
          for (std::size_t p = 0; p < d; ++p) {
            const double diff = qd[i * d + p] - kd[j * d + p];
            const double s = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
            if (want_q) gq[i * d + p] += gij * s;
            if (want_k) gk[j * d + p] -= gij * s;
          }
        }
    });
  }
  return out;
}

Tensor reduce_mean_axis(const Tensor& x, std::size_t axis, const Mask* mask) {
  const Shape& shape = x.shape();
  if (axis >= shape.size()) {
    throw DimensionError("reduce_mean_axis: axis " + std::to_string(axis) + " out of range for " +
                         shape_str(shape));
  }
  if (mask) require_mask(*mask, shape, "reduce_mean_axis");
  std::size_t outer = 1, inner = 1;
  for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
  for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
  const std::size_t len = shape[axis];
  Shape out_shape;
  for (std::size_t a = 0; a < shape.size(); ++a)
    if (a != axis) out_shape.push_back(shape[a]);
  if (out_shape.empty()) out_shape = {1};

  const auto xd = x.data();
  std::vector<double> y(outer * inner);
  std::vector<double> counts(outer * inner);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t in = 0; in < inner; ++in) {
      double acc = 0.0;
      std::size_t c = 0;
      for (std::size_t t = 0; t < len; ++t) {
        const std::size_t flat = (o * len + t) * inner + in;
        if (mask && !mask->at(flat)) continue;
        acc = c == 0 ? xd[flat] : acc + xd[flat];
        ++c;
      }
      if (c == 0) {
        throw DegenerateReductionError("reduce_mean_axis: slice " + std::to_string(o * inner + in) +
                                       " has no unmasked entries");
      }
      y[o * inner + in] = acc / static_cast<double>(c);
      counts[o * inner + in] = static_cast<double>(c);
      count::adds_subs(c - 1);
      count::divs(1);
    }
  Tensor out = make_tensor(out_shape, std::move(y));
  if (detail::needs_grad({&x})) {
    std::vector<std::uint8_t> keep = mask ? mask->keep : std::vector<std::uint8_t>{};
    detail::record({&x}, out, [x, out, outer, inner, len, counts = std::move(counts),
                               keep = std::move(keep)] {
      const auto g = gout(out);
      auto gx = gbuf(x);
      for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t in = 0; in < inner; ++in) {
          const double share = g[o * inner + in] / counts[o * inner + in];
          for (std::size_t t = 0; t < len; ++t) {
            const std::size_t flat = (o * len + t) * inner + in;
            if (!keep.empty() && !keep[flat]) continue;
            gx[flat] += share;
          }
        }
    });
  }
  return out;
}

Tensor softmax_rows(const Tensor& s, const Mask* mask) {
  require_rank2(s, "softmax_rows");
  if (mask) require_mask(*mask, s.shape(), "softmax_rows");
  const std::size_t m = s.rows(), n = s.cols();
  const auto sd = s.data();
  std::vector<double> p(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask && !mask->at(i, j)) continue;
      mx = std::max(mx, sd[i * n + j]);
      ++c;
    }
    if (c == 0) {
      throw DegenerateReductionError("softmax_rows: row " + std::to_string(i) + " is fully masked");
    }
    double total = 0.0;
    bool first = true;
    for (std::size_t j = 0; j < n; ++j) {
      if (mask && !mask->at(i, j)) continue;
      const double e = std::exp(sd[i * n + j] - mx);
      p[i * n + j] = e;
      total = first ? e : total + e;
      first = false;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (mask && !mask->at(i, j)) continue;
      p[i * n + j] /= total;
    }
    count::adds_subs(c + (c - 1));
    count::exps(c);
    count::divs(c);
  }
  Tensor out = make_tensor({m, n}, std::move(p));
  if (detail::needs_grad({&s})) {
    detail::record({&s}, out, [s, out, m, n] {
      const auto g = gout(out);
      const auto pd = out.data();
      auto gs = gbuf(s);
      for (std::size_t i = 0; i < m; ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += pd[i * n + j] * g[i * n + j];
        for (std::size_t j = 0; j < n; ++j) gs[i * n + j] += pd[i * n + j] * (g[i * n + j] - dot);
      }
    });
  }
  return out;
}

Tensor sum(const Tensor& x) {
  const auto xd = x.data();
  double acc = xd[0];
  for (std::size_t i = 1; i < xd.size(); ++i) acc += xd[i];
  Tensor out = make_tensor({1}, {acc});
  if (detail::needs_grad({&x})) {
    detail::record({&x}, out, [x, out] {
      const double g = gout(out)[0];
      auto gx = gbuf(x);
      for (auto& v : gx) v += g;
    });
  }
  return out;
}

Tensor mean(const Tensor& x) { return scale(sum(x), 1.0 / static_cast<double>(x.size())); }

Tensor add_n(std::span<const Tensor> xs) {
  if (xs.empty()) throw ContractError("add_n: no operands");
  for (const auto& t : xs) require_same_shape(xs[0], t, "add_n");
  std::vector<double> y(xs[0].data().begin(), xs[0].data().end());
  for (std::size_t t = 1; t < xs.size(); ++t) {
    const auto d = xs[t].data();
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += d[i];
  }
  Tensor out = make_tensor(xs[0].shape(), std::move(y));
  if (detail::needs_grad(xs)) {
    std::vector<Tensor> ins(xs.begin(), xs.end());
    detail::record(xs, out, [ins, out] {
      const auto g = gout(out);
      for (const auto& t : ins) {
        if (!t.requires_grad()) continue;
        auto gt = gbuf(t);
        for (std::size_t i = 0; i < g.size(); ++i) gt[i] += g[i];
      }
    });
  }
  return out;
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_cols: no operands");
  const std::size_t m = parts[0].rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != m) {
      throw DimensionError("concat_cols: row counts disagree, " + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()));
    }
    total += p.cols();
  }
  std::vector<double> y(m * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t c = p.cols();
    const auto pd = p.data();
    for (std::size_t i = 0; i < m; ++i)
      std::copy_n(pd.begin() + i * c, c, y.begin() + i * total + offset);
    offset += c;
  }
  Tensor out = make_tensor({m, total}, std::move(y));
  if (detail::needs_grad(parts)) {
    std::vector<Tensor> ins(parts.begin(), parts.end());
    detail::record(parts, out, [ins, out, m, total] {
      const auto g = gout(out);
      std::size_t offset = 0;
      for (const auto& p : ins) {
        const std::size_t c = p.cols();
        if (p.requires_grad()) {
          auto gp = gbuf(p);
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < c; ++j) gp[i * c + j] += g[i * total + offset + j];
        }
        offset += c;
      }
    });
  }
  return out;
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no operands");
  const std::size_t n = parts[0].cols();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.cols() != n) {
      throw DimensionError("concat_rows: column counts disagree, " + shape_str(parts[0].shape()) +
                           " vs " + shape_str(p.shape()));
    }
    total += p.rows();
  }
  std::vector<double> y;
  y.reserve(total * n);
  for (const auto& p : parts) y.insert(y.end(), p.data().begin(), p.data().end());
  Tensor out = make_tensor({total, n}, std::move(y));
  if (detail::needs_grad(parts)) {
    std::vector<Tensor> ins(parts.begin(), parts.end());
    detail::record(parts, out, [ins, out] {
      const auto g = gout(out);
      std::size_t offset = 0;
      for (const auto& p : ins) {
        if (p.requires_grad()) {
          auto gp = gbuf(p);
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  require_rank2(table, "gather_rows");
  const std::size_t v = table.rows(), d = table.cols();
  if (ids.empty()) throw ContractError("gather_rows: empty id list");
  const auto td = table.data();
  std::vector<double> y(ids.size() * d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= v) {
      throw InputError("gather_rows: id " + std::to_string(ids[r]) + " >= table rows " +
                       std::to_string(v));
    }
    std::copy_n(td.begin() + ids[r] * d, d, y.begin() + r * d);
  }
  Tensor out = make_tensor({ids.size(), d}, std::move(y));
  if (detail::needs_grad({&table})) {
    detail::record({&table}, out, [table, out, rows = std::vector<std::size_t>(ids.begin(), ids.end()), d] {
      const auto g = gout(out);
      auto gt = gbuf(table);
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t j = 0; j < d; ++j) gt[rows[r] * d + j] += g[r * d + j];
    });
  }
  return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  require_rank2(x, "layer_norm");
  const std::size_t m = x.rows(), n = x.cols();
  if (gain.size() != n || bias.size() != n) {
    throw DimensionError("layer_norm: affine parameters " + shape_str(gain.shape()) + "/" +
                         shape_str(bias.shape()) + " for rows of width " + std::to_string(n));
  }
  const auto xd = x.data();
  const auto gd = gain.data();
  const auto bd = bias.data();
  std::vector<double> xhat(m * n), y(m * n), rstd(m);
  for (std::size_t i = 0; i < m; ++i) {
    double mu = 0.0;
    for (std::size_t j = 0; j < n; ++j) mu += xd[i * n + j];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double c = xd[i * n + j] - mu;
      var += c * c;
    }
    var /= static_cast<double>(n);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      xhat[i * n + j] = (xd[i * n + j] - mu) * rstd[i];
      y[i * n + j] = xhat[i * n + j] * gd[j] + bd[j];
    }
  }
  Tensor out = make_tensor({m, n}, std::move(y));
  if (detail::needs_grad({&x, &gain, &bias})) {
    detail::record({&x, &gain, &bias}, out,
                   [x, gain, bias, out, m, n, xhat = std::move(xhat), rstd = std::move(rstd)] {
      const auto g = gout(out);
      const auto gd = gain.data();
      if (gain.requires_grad()) {
        auto gg = gbuf(gain);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gg[j] += g[i * n + j] * xhat[i * n + j];
      }
      if (bias.requires_grad()) {
        auto gb = gbuf(bias);
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = 0; j < n; ++j) gb[j] += g[i * n + j];
      }
      if (x.requires_grad()) {
        auto gx = gbuf(x);
        const double inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t i = 0; i < m; ++i) {
          double mean_d = 0.0, mean_dx = 0.0;
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = g[i * n + j] * gd[j];
            mean_d += dxh;
            mean_dx += dxh * xhat[i * n + j];
          }
          mean_d *= inv_n;
          mean_dx *= inv_n;
          for (std::size_t j = 0; j < n; ++j) {
            const double dxh = g[i * n + j] * gd[j];
            gx[i * n + j] += rstd[i] * (dxh - mean_d - xhat[i * n + j] * mean_dx);
          }
        }
      }
    });
  }
  return out;
}

Tensor mse_loss(const Tensor& pred, const Tensor& target, std::span<const std::uint8_t> row_keep) {
  require_rank2(pred, "mse_loss");
  if (pred.shape() != target.shape()) {
    throw ContractError("mse_loss: shape mismatch " + shape_str(pred.shape()) + " vs " +
                        shape_str(target.shape()));
  }
  const std::size_t m = pred.rows(), n = pred.cols();
  if (!row_keep.empty() && row_keep.size() != m) {
    throw ContractError("mse_loss: row mask has " + std::to_string(row_keep.size()) +
                        " entries for " + std::to_string(m) + " rows");
  }
  std::vector<std::uint8_t> keep(row_keep.begin(), row_keep.end());
  if (keep.empty()) keep.assign(m, 1);
  const auto pd = pred.data();
  const auto td = target.data();
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!keep[i]) continue;
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = pd[i * n + j] - td[i * n + j];
      acc += diff * diff;
    }
    count += n;
  }
  if (count == 0) throw DegenerateReductionError("mse_loss: every row is masked");
  const double denom = static_cast<double>(count);
  Tensor out = make_tensor({1}, {acc / denom});
  if (detail::needs_grad({&pred})) {
    detail::record({&pred}, out, [pred, target, out, keep = std::move(keep), n, denom] {
      const double g = gout(out)[0];
      const auto pd = pred.data();
      const auto td = target.data();
      auto gp = gbuf(pred);
      for (std::size_t i = 0; i < keep.size(); ++i) {
        if (!keep[i]) continue;
        for (std::size_t j = 0; j < n; ++j)
          gp[i * n + j] += g * 2.0 * (pd[i * n + j] - td[i * n + j]) / denom;
      }
    });
  }
  return out;
}

namespace {
// log-softmax of row i of `z` scaled by 1/t, written into `out`.
void log_softmax_row(std::span<const double> z, std::size_t n, double inv_t, std::span<double> out) {
  double mx = z[0] * inv_t;
  for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, z[j] * inv_t);
  double total = 0.0;
  for (std::size_t j = 0; j < n; ++j) total += std::exp(z[j] * inv_t - mx);
  const double lse = mx + std::log(total);
  for (std::size_t j = 0; j < n; ++j) out[j] = z[j] * inv_t - lse;
}
}  // namespace

Tensor cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  require_rank2(logits, "cross_entropy");
  const std::size_t b = logits.rows(), c = logits.cols();
  if (labels.size() != b) {
    throw ContractError("cross_entropy: " + std::to_string(labels.size()) + " labels for " +
                        std::to_string(b) + " rows");
  }
  const auto ld = logits.data();
  std::vector<double> logp(b * c);
  double acc = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    if (labels[i] >= c) {
      throw InputError("cross_entropy: label " + std::to_string(labels[i]) + " out of range for " +
                       std::to_string(c) + " classes");
    }
    log_softmax_row(ld.subspan(i * c, c), c, 1.0, std::span<double>(logp).subspan(i * c, c));
    acc -= logp[i * c + labels[i]];
  }
  Tensor out = make_tensor({1}, {acc / static_cast<double>(b)});
  if (detail::needs_grad({&logits})) {
    detail::record({&logits}, out, [logits, out, b, c, logp = std::move(logp),
                                    ys = std::vector<std::size_t>(labels.begin(), labels.end())] {
      const double g = gout(out)[0] / static_cast<double>(b);
      auto gl = gbuf(logits);
      for (std::size_t i = 0; i < b; ++i)
        for (std::size_t j = 0; j < c; ++j)
          gl[i * c + j] += g * (std::exp(logp[i * c + j]) - (j == ys[i] ? 1.0 : 0.0));
    });
  }
  return out;
}

Tensor soft_kl(const Tensor& teacher_logits, const Tensor& student_logits, double temperature) {
  if (!(temperature > 0.0)) {
    throw ContractError("soft_kl: temperature must be positive, got " + std::to_string(temperature));
  }
  require_rank2(student_logits, "soft_kl");
  if (teacher_logits.shape() != student_logits.shape()) {
    throw ContractError("soft_kl: shape mismatch " + shape_str(teacher_logits.shape()) + " vs " +
                        shape_str(student_logits.shape()));
  }
  const std::size_t b = student_logits.rows(), c = student_logits.cols();
  const double inv_t = 1.0 / temperature;
  const auto td = teacher_logits.data();
  const auto sd = student_logits.data();
  std::vector<double> logpt(b * c), logps(b * c);
  double acc = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    log_softmax_row(td.subspan(i * c, c), c, inv_t, std::span<double>(logpt).subspan(i * c, c));
    log_softmax_row(sd.subspan(i * c, c), c, inv_t, std::span<double>(logps).subspan(i * c, c));
    for (std::size_t j = 0; j < c; ++j) {
      const double pt = std::exp(logpt[i * c + j]);
      if (pt > 0.0) acc += pt * (logpt[i * c + j] - logps[i * c + j]);
    }
  }
  const double t2 = temperature * temperature;
  Tensor out = make_tensor({1}, {t2 * acc / static_cast<double>(b)});
  if (detail::needs_grad({&student_logits})) {
    detail::record({&student_logits}, out,
                   [student_logits, out, b, c, temperature, logpt = std::move(logpt),
                    logps = std::move(logps)] {
      // d/ds of T^2 * KL = T * (p_s - p_t) per row, averaged over the batch.
      const double g = gout(out)[0] * temperature / static_cast<double>(b);
      auto gs = gbuf(student_logits);
      for (std::size_t i = 0; i < b * c; ++i) gs[i] += g * (std::exp(logps[i]) - std::exp(logpt[i]));
    });
  }
  return out;
}

}  // namespace ihb
