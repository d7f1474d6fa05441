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

#include "attention/attention.hpp"

#include <cmath>

#include "core/counters.hpp"
#include "core/error.hpp"

namespace ihb {

const char* to_string(Variant v) noexcept {
  return v == Variant::inhibitor ? "inhibitor" : "dot_product";
}

Variant parse_variant(std::string_view name) {
  if (name == "inhibitor") return Variant::inhibitor;
  if (name == "dot_product" || name == "dot-product" || name == "dot") return Variant::dot_product;
  throw ContractError("unknown attention variant '" + std::string(name) +
                      "' (expected inhibitor or dot_product)");
}

AttentionMask key_padding_mask(std::span<const std::uint8_t> key_valid, std::size_t n_queries) {
  AttentionMask m;
  m.shape = {n_queries, key_valid.size()};
  m.keep.reserve(n_queries * key_valid.size());
  for (std::size_t i = 0; i < n_queries; ++i) m.keep.insert(m.keep.end(), key_valid.begin(), key_valid.end());
  return m;
}

void validate_attention_mask(const AttentionMask& mask, std::size_t n_q, std::size_t n_k) {
  if (mask.shape != Shape{n_q, n_k}) {
    throw DimensionError("attention mask " + shape_str(mask.shape) + " for scores [" +
                         std::to_string(n_q) + "x" + std::to_string(n_k) + "]");
  }
  for (std::size_t i = 0; i < n_q; ++i) {
    bool any = false;
    for (std::size_t j = 0; j < n_k && !any; ++j) any = mask.at(i, j);
    if (!any) {
      throw DegenerateReductionError("attention mask row " + std::to_string(i) + " has no keys");
    }
  }
}

AttentionDropout draw_attention_dropout(std::size_t n_q, std::size_t n_k, double rate, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ContractError("attention dropout rate must lie in [0,1), got " + std::to_string(rate));
  }
  AttentionDropout d;
  d.keep.resize(n_q * n_k);
  for (auto& k : d.keep) k = rng.bernoulli(rate) ? 0 : 1;
  d.factor = 1.0 / (1.0 - rate);
  return d;
}

Tensor manhattan_scores(const Tensor& q, const Tensor& k, const Tensor& gamma) {
  const double d = static_cast<double>(q.cols());
  return mul_scalar(abs_diff_sum(q, k), gamma, 1.0 / std::sqrt(d));
}

Tensor center_shift(const Tensor& z, const Tensor& delta, const AttentionMask* mask) {
  if (mask) validate_attention_mask(*mask, z.rows(), z.cols());
  const Tensor centered = sub_colvec(z, reduce_mean_axis(z, 1, mask));
  Tensor shifted = halfrect(add_scalar(centered, delta, -1.0), Sign::positive);
  if (mask) shifted = masked_fill(shifted, *mask, kMaskSentinel);
  return shifted;
}

Tensor inhibitor_mix(const Tensor& zbar, const Tensor& v, const Tensor& eta,
                     const AttentionDropout* dropout) {
  if (zbar.rank() != 2 || v.rank() != 2 || zbar.cols() != v.rows()) {
    throw DimensionError("inhibitor_mix: scores " + shape_str(zbar.shape()) + " vs values " +
                         shape_str(v.shape()));
  }
  if (eta.size() != 1) throw DimensionError("inhibitor_mix: eta must be a one-element tensor");
  const std::size_t nq = zbar.rows(), nk = zbar.cols(), dv = v.cols();
  if (dropout && dropout->keep.size() != nq * nk) {
    throw DimensionError("inhibitor_mix: dropout flags do not match scores");
  }
  const auto zd = zbar.data();
  const auto vd = v.data();
  const double e = eta.item();

  std::vector<double> vpos(nk * dv), vneg(nk * dv);
  for (std::size_t t = 0; t < nk * dv; ++t) {
    vpos[t] = vd[t] > 0.0 ? vd[t] : 0.0;
    vneg[t] = vd[t] < 0.0 ? vd[t] : 0.0;
  }
  count::relu_ops(2 * nk * dv);

  std::vector<double> pre(nq * dv), h(nq * dv);
  for (std::size_t i = 0; i < nq; ++i) {
    for (std::size_t l = 0; l < dv; ++l) {
      double acc = 0.0;
      for (std::size_t j = 0; j < nk; ++j) {
        const double z = zd[i * nk + j];
        const double a = vpos[j * dv + l] - z;
        const double b = vneg[j * dv + l] + z;
        const double ra = a > 0.0 ? a : 0.0;
        const double rb = b < 0.0 ? b : 0.0;
        if (dropout) {
          if (dropout->keep[i * nk + j]) acc += (ra + rb) * dropout->factor;
        } else {
          acc = j == 0 ? ra + rb : acc + ra + rb;
        }
      }
      pre[i * dv + l] = acc;
      h[i * dv + l] = e * acc;
    }
  }
  count::adds_subs(nq * dv * (2 * nk) + nq * dv * (2 * nk - 1));
  count::relu_ops(nq * dv * 2 * nk);
  if (dropout) count::mults(nq * dv * nk);
  count::mults(nq * dv);

  Tensor out = make_tensor({nq, dv}, std::move(h));
  if (detail::needs_grad({&zbar, &v, &eta})) {
    std::vector<std::uint8_t> keep = dropout ? dropout->keep : std::vector<std::uint8_t>{};
    const double factor = dropout ? dropout->factor : 1.0;
    detail::record({&zbar, &v, &eta}, out,
                   [zbar, v, eta, out, nq, nk, dv, pre = std::move(pre), keep = std::move(keep),
                    factor] {
      const auto g = out.node()->grad;
      const auto zd = zbar.data();
      const auto vd = v.data();
      const double e = eta.item();
      if (eta.requires_grad()) {
        double acc = 0.0;
        for (std::size_t t = 0; t < g.size(); ++t) acc += g[t] * pre[t];
        detail::grad_buffer(*eta.node())[0] += acc;
      }
      const bool want_z = zbar.requires_grad(), want_v = v.requires_grad();
      if (!want_z && !want_v) return;
      std::span<double> gz, gv;
      if (want_z) gz = detail::grad_buffer(*zbar.node());
      if (want_v) gv = detail::grad_buffer(*v.node());
      for (std::size_t i = 0; i < nq; ++i) {
        for (std::size_t j = 0; j < nk; ++j) {
          const double c = keep.empty() ? 1.0 : (keep[i * nk + j] ? factor : 0.0);
          if (c == 0.0) continue;
          const double z = zd[i * nk + j];
          double dz = 0.0;
          for (std::size_t l = 0; l < dv; ++l) {
            const double x = vd[j * dv + l];
            const double vp = x > 0.0 ? x : 0.0;
            const double vn = x < 0.0 ? x : 0.0;
            const bool a_on = vp - z > 0.0;
            const bool b_on = vn + z < 0.0;
            const double gl = e * c * g[i * dv + l];
            if (a_on) dz -= gl;
            if (b_on) dz += gl;
            if (want_v) {
              if (a_on && x > 0.0) gv[j * dv + l] += gl;
              if (b_on && x < 0.0) gv[j * dv + l] += gl;
            }
          }
          if (want_z) gz[i * nk + j] += dz;
        }
      }
    });
  }
  return out;
}

Tensor inhibitor_attention(const Tensor& q, const Tensor& k, const Tensor& v, const Tensor& gamma,
                           const Tensor& eta, const Tensor& delta, const AttentionMask* mask,
                           const AttentionDropout* dropout) {
  if (k.rows() != v.rows()) {
    throw DimensionError("inhibitor_attention: keys " + shape_str(k.shape()) + " vs values " +
                         shape_str(v.shape()));
  }
  const Tensor z = manhattan_scores(q, k, gamma);
  const Tensor zbar = center_shift(z, delta, mask);
  return inhibitor_mix(zbar, v, eta, dropout);
}

Tensor dot_product_weights(const Tensor& q, const Tensor& k, const AttentionMask* mask) {
  if (q.rank() != 2 || k.rank() != 2 || q.cols() != k.cols()) {
    throw DimensionError("dot_product_attention: queries " + shape_str(q.shape()) + " vs keys " +
                         shape_str(k.shape()));
  }
  if (mask) validate_attention_mask(*mask, q.rows(), k.rows());
  const double d = static_cast<double>(q.cols());
  return softmax_rows(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(d)), mask);
}

Tensor dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                             const AttentionMask* mask, const AttentionDropout* dropout) {
  if (k.rows() != v.rows()) {
    throw DimensionError("dot_product_attention: keys " + shape_str(k.shape()) + " vs values " +
                         shape_str(v.shape()));
  }
  Tensor w = dot_product_weights(q, k, mask);
  if (dropout) w = apply_keep_mask(w, dropout->keep, dropout->factor);
  return matmul(w, v);
}

// ---------------------------------------------------------------------------

HeadParams HeadParams::init(std::size_t d_model, std::size_t n_heads, std::size_t d_head,
                            double init_std, Rng& rng, double eta_init) {
  auto random_matrix = [&](std::size_t r, std::size_t c) {
    std::vector<double> vals(r * c);
    for (auto& x : vals) x = rng.normal(0.0, init_std);
    return make_tensor({r, c}, std::move(vals), true);
  };
  HeadParams p;
  for (std::size_t h = 0; h < n_heads; ++h) {
    p.w_q.push_back(random_matrix(d_model, d_head));
    p.w_k.push_back(random_matrix(d_model, d_head));
    p.w_v.push_back(random_matrix(d_model, d_head));
    p.gamma.push_back(make_tensor({1}, {kInitGamma}, true));
    p.eta.push_back(make_tensor({1}, {eta_init}, true));
    p.delta.push_back(make_tensor({1}, {kInitDelta}, true));
  }
  p.w_o = random_matrix(n_heads * d_head, d_model);
  return p;
}

void HeadParams::reset_scalars(double eta_init) {
  for (std::size_t h = 0; h < n_heads(); ++h) {
    gamma[h].mutable_data()[0] = kInitGamma;
    eta[h].mutable_data()[0] = eta_init;
    delta[h].mutable_data()[0] = kInitDelta;
  }
}

void HeadParams::validate() const {
  const std::size_t h = n_heads();
  if (h == 0) throw DimensionError("attention sublayer has no heads");
  if (w_k.size() != h || w_v.size() != h || gamma.size() != h || eta.size() != h ||
      delta.size() != h) {
    throw DimensionError("per-head parameter lists disagree on head count");
  }
  const Shape proj{d_model(), d_head()};
  for (std::size_t i = 0; i < h; ++i) {
    for (const Tensor* t : {&w_q[i], &w_k[i], &w_v[i]}) {
      if (t->shape() != proj) {
        throw DimensionError("head " + std::to_string(i) + " projection " + shape_str(t->shape()) +
                             ", expected " + shape_str(proj));
      }
    }
    if (gamma[i].size() != 1 || eta[i].size() != 1 || delta[i].size() != 1) {
      throw DimensionError("head " + std::to_string(i) + " scalars must have one element");
    }
  }
  if (w_o.shape() != Shape{h * d_head(), d_model()}) {
    throw DimensionError("output projection " + shape_str(w_o.shape()) + ", expected [" +
                         std::to_string(h * d_head()) + "x" + std::to_string(d_model()) + "]");
  }
}

Tensor multi_head_forward(const Tensor& x, const HeadParams& params, const AttentionMask* mask,
                          Variant variant, double attention_dropout, Rng* rng) {
  params.validate();
  if (x.rank() != 2 || x.cols() != params.d_model()) {
    throw DimensionError("multi_head_forward: input " + shape_str(x.shape()) + " for d_model " +
                         std::to_string(params.d_model()));
  }
  const std::size_t n = x.rows();
  if (attention_dropout > 0.0 && !rng) {
    throw ContractError("attention dropout requested without a random stream");
  }
  std::vector<Tensor> heads;
  heads.reserve(params.n_heads());
  for (std::size_t h = 0; h < params.n_heads(); ++h) {
    const Tensor q = matmul(x, params.w_q[h]);
    const Tensor k = matmul(x, params.w_k[h]);
    const Tensor v = matmul(x, params.w_v[h]);
    AttentionDropout drop;
    const AttentionDropout* drop_ptr = nullptr;
    if (attention_dropout > 0.0) {
      drop = draw_attention_dropout(n, n, attention_dropout, *rng);
      drop_ptr = &drop;
    }
    if (variant == Variant::inhibitor) {
      heads.push_back(inhibitor_attention(q, k, v, params.gamma[h], params.eta[h], params.delta[h],
                                          mask, drop_ptr));
    } else {
      heads.push_back(dot_product_attention(q, k, v, mask, drop_ptr));
    }
  }
  return matmul(concat_cols(heads), params.w_o);
}

// ---------------------------------------------------------------------------

bool nudge_off_kinks(Tensor& q, Tensor& k, Tensor& v, const Tensor& gamma, Tensor& delta,
                     const AttentionMask* mask, double tol, double step, int max_rounds) {
  const std::size_t nq = q.rows(), nk = k.rows(), d = q.cols(), dv = v.cols();
  auto qd = q.mutable_data();
  auto vd = v.mutable_data();
  auto deltad = delta.mutable_data();
  const auto kd = k.data();
  const double c = gamma.item() / std::sqrt(static_cast<double>(d));
  auto kept = [&](std::size_t i, std::size_t j) { return !mask || mask->at(i, j); };

  for (int round = 0; round < max_rounds; ++round) {
    bool moved = false;
    // |Q_ip - K_jp| near 0
    for (std::size_t i = 0; i < nq; ++i)
      for (std::size_t j = 0; j < nk; ++j)
        for (std::size_t p = 0; p < d; ++p)
          if (std::abs(qd[i * d + p] - kd[j * d + p]) < tol) {
            qd[i * d + p] += step;
            moved = true;
          }
    if (moved) continue;

    std::vector<double> z(nq * nk), zbar(nq * nk, 0.0);
    for (std::size_t i = 0; i < nq; ++i)
      for (std::size_t j = 0; j < nk; ++j) {
        double acc = 0.0;
        for (std::size_t p = 0; p < d; ++p) acc += std::abs(qd[i * d + p] - kd[j * d + p]);
        z[i * nk + j] = c * acc;
      }
    // center-shift rectifier argument near 0
    for (std::size_t i = 0; i < nq && !moved; ++i) {
      double total = 0.0;
      std::size_t cnt = 0;
      for (std::size_t j = 0; j < nk; ++j)
        if (kept(i, j)) {
          total += z[i * nk + j];
          ++cnt;
        }
      const double mean = total / static_cast<double>(cnt);
      for (std::size_t j = 0; j < nk; ++j) {
        if (!kept(i, j)) continue;
        const double arg = z[i * nk + j] - mean - deltad[0];
        if (std::abs(arg) < tol) {
          moved = true;
          break;
        }
        zbar[i * nk + j] = arg > 0.0 ? arg : 0.0;
      }
    }
    if (moved) {
      deltad[0] += step;
      continue;
    }
    // value rectifiers and the two mixing rectifiers
    for (std::size_t j = 0; j < nk; ++j)
      for (std::size_t l = 0; l < dv; ++l) {
        const double x = vd[j * dv + l];
        bool bad = std::abs(x) < tol;
        for (std::size_t i = 0; i < nq && !bad; ++i) {
          if (!kept(i, j)) continue;
          const double zb = zbar[i * nk + j];
          if (x > 0.0 && std::abs(x - zb) < tol) bad = true;
          if (x < 0.0 && std::abs(x + zb) < tol) bad = true;
        }
        if (bad) {
          vd[j * dv + l] += step;
          moved = true;
        }
      }
    if (!moved) return true;
  }
  return false;
}

}  // namespace ihb
