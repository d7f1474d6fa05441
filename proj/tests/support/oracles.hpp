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

// Naive scalar-loop reference implementations used as test oracles. They
// share no code with the library beyond the Tensor container conversions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "core/tensor.hpp"

namespace oracle {

using Mat = std::vector<std::vector<double>>;
using MaskMat = std::vector<std::vector<int>>;

inline constexpr double kSentinel = 1e9;

inline Mat to_mat(const ihb::Tensor& t) {
  Mat m(t.rows(), std::vector<double>(t.cols()));
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t.at(i, j);
  return m;
}

inline ihb::Tensor to_tensor(const Mat& m) {
  std::vector<double> flat;
  for (const auto& row : m) flat.insert(flat.end(), row.begin(), row.end());
  return ihb::make_tensor({m.size(), m.empty() ? 0 : m[0].size()}, flat);
}

inline double max_abs_diff(const Mat& a, const Mat& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a[i].size(); ++j) worst = std::max(worst, std::abs(a[i][j] - b[i][j]));
  return worst;
}

/// Random matrix from a plain engine, independent of the library's Rng.
inline Mat random_mat(std::size_t r, std::size_t c, std::mt19937_64& eng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(r, std::vector<double>(c));
  for (auto& row : m)
    for (auto& x : row) x = u(eng);
  return m;
}

inline Mat manhattan(const Mat& q, const Mat& k, double gamma) {
  const std::size_t d = q[0].size();
  Mat z(q.size(), std::vector<double>(k.size()));
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = 0; j < k.size(); ++j) {
      double s = 0.0;
      for (std::size_t c = 0; c < d; ++c) s += std::abs(q[i][c] - k[j][c]);
      z[i][j] = gamma * s / std::sqrt(static_cast<double>(d));
    }
  return z;
}

inline Mat center_shift(const Mat& z, double delta, const MaskMat* mask = nullptr) {
  Mat out = z;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double total = 0.0;
    int count = 0;
    for (std::size_t j = 0; j < z[i].size(); ++j) {
      if (mask && !(*mask)[i][j]) continue;
      total += z[i][j];
      ++count;
    }
    const double mu = total / count;
    for (std::size_t j = 0; j < z[i].size(); ++j) {
      if (mask && !(*mask)[i][j]) {
        out[i][j] = kSentinel;
      } else {
        const double x = z[i][j] - mu - delta;
        out[i][j] = x > 0.0 ? x : 0.0;
      }
    }
  }
  return out;
}

inline Mat mix(const Mat& zbar, const Mat& v, double eta) {
  const std::size_t nq = zbar.size(), nk = v.size(), dv = v[0].size();
  Mat h(nq, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < nq; ++i)
    for (std::size_t l = 0; l < dv; ++l) {
      double s = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        const double vp = v[j][l] > 0.0 ? v[j][l] : 0.0;
        const double vn = v[j][l] < 0.0 ? v[j][l] : 0.0;
        const double a = vp - zbar[i][j];
        const double b = vn + zbar[i][j];
        s += (a > 0.0 ? a : 0.0) + (b < 0.0 ? b : 0.0);
      }
      h[i][l] = eta * s;
    }
  return h;
}

inline Mat inhibitor_head(const Mat& q, const Mat& k, const Mat& v, double gamma, double eta, double delta,
                          const MaskMat* mask = nullptr) {
  return mix(center_shift(manhattan(q, k, gamma), delta, mask), v, eta);
}

inline Mat dot_product_head(const Mat& q, const Mat& k, const Mat& v, const MaskMat* mask = nullptr) {
  const std::size_t nq = q.size(), nk = k.size(), d = q[0].size(), dv = v[0].size();
  Mat h(nq, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < nq; ++i) {
    std::vector<double> s(nk, 0.0);
    double mx = -INFINITY;
    for (std::size_t j = 0; j < nk; ++j) {
      if (mask && !(*mask)[i][j]) continue;
      for (std::size_t c = 0; c < d; ++c) s[j] += q[i][c] * k[j][c];
      s[j] /= std::sqrt(static_cast<double>(d));
      mx = std::max(mx, s[j]);
    }
    double z = 0.0;
    std::vector<double> w(nk, 0.0);
    for (std::size_t j = 0; j < nk; ++j) {
      if (mask && !(*mask)[i][j]) continue;
      w[j] = std::exp(s[j] - mx);
      z += w[j];
    }
    for (std::size_t j = 0; j < nk; ++j)
      for (std::size_t l = 0; l < dv; ++l) h[i][l] += w[j] / z * v[j][l];
  }
  return h;
}

/// T^2 * KL(softmax(t/T) || softmax(s/T)), mean over rows.
inline double soft_kl(const Mat& t, const Mat& s, double temp) {
  double total = 0.0;
  for (std::size_t r = 0; r < t.size(); ++r) {
    const std::size_t c = t[r].size();
    std::vector<double> p(c), q(c);
    double zp = 0.0, zq = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      p[j] = std::exp(t[r][j] / temp);
      q[j] = std::exp(s[r][j] / temp);
      zp += p[j];
      zq += q[j];
    }
    for (std::size_t j = 0; j < c; ++j) total += (p[j] / zp) * std::log((p[j] / zp) / (q[j] / zq));
  }
  return temp * temp * total / static_cast<double>(t.size());
}

/// One bias-corrected AdamW update of a single scalar.
struct AdamScalar {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double p, double g, double lr, double b1, double b2, double eps, double wd) {
    ++t;
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g * g;
    const double mhat = m / (1.0 - std::pow(b1, t));
    const double vhat = v / (1.0 - std::pow(b2, t));
    return p - lr * (mhat / (std::sqrt(vhat) + eps) + wd * p);
  }
};

inline double layer_norm_row(const std::vector<double>& x, std::size_t j, double g, double b, double eps) {
  double mu = 0.0;
  for (double v : x) mu += v;
  mu /= static_cast<double>(x.size());
  double var = 0.0;
  for (double v : x) var += (v - mu) * (v - mu);
  var /= static_cast<double>(x.size());
  return g * (x[j] - mu) / std::sqrt(var + eps) + b;
}

}  // namespace oracle
