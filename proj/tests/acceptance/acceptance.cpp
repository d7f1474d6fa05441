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

// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "attention/attention.hpp"
#include "core/counters.hpp"
#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "cost/cost.hpp"
#include "data/checkpoint.hpp"
#include "data/config.hpp"
#include "data/dataset.hpp"
#include "data/tokenizer.hpp"
#include "diag/gradcheck_suite.hpp"
#include "distill/distill.hpp"
#include "optim/optim.hpp"
#include "oracles.hpp"

using namespace ihb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += "FAILED " + what;
    }
  }
  void note(const std::string& s) {
    if (!detail.empty()) detail += "; ";
    detail += s;
  }
};

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

Tensor scalar(double v) { return make_tensor({1}, {v}); }

bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  out << s;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("ihb_accept_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

oracle::MaskMat mask_mat(const AttentionMask& m) {
  oracle::MaskMat out(m.rows(), std::vector<int>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m.at(i, j) ? 1 : 0;
  return out;
}

// ---------------------------------------------------------------------------

Outcome gradient_suite() {
  Outcome o;
  double worst = 0.0;
  std::size_t rows = 0;
  for (Variant v : {Variant::inhibitor, Variant::dot_product}) {
    for (const auto& r : run_gradcheck_suite(v, 2024, 50)) {
      o.require(r.instances >= 50, r.op + " instances");
      o.require(r.max_rel_error < 1e-5, r.op + " error " + fmt(r.max_rel_error));
      worst = std::max(worst, r.max_rel_error);
      ++rows;
    }
  }
  // Distillation losses built on top of the primitives.
  std::mt19937_64 eng(99);
  for (int t = 0; t < 50; ++t) {
    const auto tm = oracle::random_mat(3, 4, eng), sm = oracle::random_mat(3, 4, eng);
    const std::vector<std::uint8_t> valid = {1, 0, 1};
    const Tensor teacher = oracle::to_tensor(tm);
    const Tensor in[] = {oracle::to_tensor(sm)};
    const double e1 = grad_check([&](std::span<const Tensor> x) { return attention_output_mse(teacher, x[0], valid); },
                                 in)
                          .max_rel_error;
    const double e2 =
        grad_check([&](std::span<const Tensor> x) { return soft_prob_distill_loss(teacher, x[0], 4.0); }, in)
            .max_rel_error;
    worst = std::max({worst, e1, e2});
    o.require(e1 < 1e-5 && e2 < 1e-5, "distillation loss gradients");
  }
  o.note(std::to_string(rows) + " op rows x 50 instances + 2 distillation losses, max rel error " + fmt(worst));
  return o;
}

Outcome forward_oracle() {
  Outcome o;
  std::mt19937_64 eng(31337);
  double worst_inh = 0.0, worst_dot = 0.0;
  const int shapes = 120;
  for (int t = 0; t < shapes; ++t) {
    const std::size_t nq = 1 + eng() % 8, nk = 1 + eng() % 8, d = 1 + eng() % 8, dv = 1 + eng() % 8;
    const auto q = oracle::random_mat(nq, d, eng), k = oracle::random_mat(nk, d, eng),
               v = oracle::random_mat(nk, dv, eng, -2, 2);
    std::uniform_real_distribution<double> u(0.3, 1.7), sh(-0.4, 0.4);
    const double g = u(eng), e = u(eng), dl = sh(eng);
    std::vector<std::uint8_t> valid(nk, 1);
    const bool masked = t % 2 == 1;
    if (masked) {
      for (auto& x : valid) x = eng() % 4 != 0;
      valid[eng() % nk] = 1;
    }
    const AttentionMask mask = key_padding_mask(valid, nq);
    const auto mm = mask_mat(mask);
    const AttentionMask* mp = masked ? &mask : nullptr;
    const oracle::MaskMat* mmp = masked ? &mm : nullptr;
    const Tensor tq = oracle::to_tensor(q), tk = oracle::to_tensor(k), tv = oracle::to_tensor(v);
    const auto hi = oracle::to_mat(inhibitor_attention(tq, tk, tv, scalar(g), scalar(e), scalar(dl), mp));
    const auto hd = oracle::to_mat(dot_product_attention(tq, tk, tv, mp));
    worst_inh = std::max(worst_inh, oracle::max_abs_diff(hi, oracle::inhibitor_head(q, k, v, g, e, dl, mmp)));
    worst_dot = std::max(worst_dot, oracle::max_abs_diff(hd, oracle::dot_product_head(q, k, v, mmp)));
  }
  o.require(worst_inh <= 1e-12, "inhibitor max abs diff " + fmt(worst_inh));
  o.require(worst_dot <= 1e-12, "dot-product max abs diff " + fmt(worst_dot));
  o.note(std::to_string(shapes) + " shapes, max abs diff inhibitor " + fmt(worst_inh) + ", dot-product " +
         fmt(worst_dot));
  return o;
}

Outcome mechanism_invariants() {
  Outcome o;
  std::mt19937_64 eng(4242);
  int checks = 0;
  double worst_perm = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t nq = 1 + eng() % 8, nk = 2 + eng() % 7, d = 1 + eng() % 8, dv = 1 + eng() % 8;
    const auto qm = oracle::random_mat(nq, d, eng), km = oracle::random_mat(nk, d, eng),
               vm = oracle::random_mat(nk, dv, eng, -2, 2);
    const Tensor q = oracle::to_tensor(qm), k = oracle::to_tensor(km), v = oracle::to_tensor(vm);
    std::uniform_real_distribution<double> u(0.3, 1.7), sh(-0.4, 0.4);
    const double g = u(eng), e = u(eng), dl = sh(eng);

    const Tensor z = manhattan_scores(q, k, scalar(g));
    const Tensor zbar = center_shift(z, scalar(dl));
    o.require(std::all_of(zbar.data().begin(), zbar.data().end(), [](double x) { return x >= 0.0; }),
              "Zbar >= 0");

    // Pass-through: Zbar = 0 gives eta times the column sums, bit for bit.
    const Tensor pass = inhibitor_mix(Tensor({nq, nk}, 0.0), v, scalar(e));
    for (std::size_t i = 0; i < nq; ++i)
      for (std::size_t l = 0; l < dv; ++l) {
        double col = 0.0;
        for (std::size_t j = 0; j < nk; ++j) col += vm[j][l];
        o.require(pass.at(i, l) == e * col, "pass-through identity");
      }

    // Total inhibition.
    double vmax = 0.0;
    for (const auto& row : vm)
      for (double x : row) vmax = std::max(vmax, std::abs(x));
    const Tensor none = inhibitor_mix(Tensor({nq, nk}, vmax), v, scalar(e));
    o.require(std::all_of(none.data().begin(), none.data().end(), [](double x) { return x == 0.0; }),
              "total inhibition");

    // Key permutation.
    std::vector<std::size_t> perm(nk);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), eng);
    oracle::Mat kp(nk), vp(nk);
    for (std::size_t j = 0; j < nk; ++j) kp[j] = km[perm[j]], vp[j] = vm[perm[j]];
    const auto h = oracle::to_mat(inhibitor_attention(q, k, v, scalar(g), scalar(e), scalar(dl)));
    const auto hp = oracle::to_mat(inhibitor_attention(q, oracle::to_tensor(kp), oracle::to_tensor(vp), scalar(g),
                                                       scalar(e), scalar(dl)));
    worst_perm = std::max(worst_perm, oracle::max_abs_diff(h, hp));

    // delta monotonicity: raising delta never raises any entry of Zbar.
    const Tensor zbar_up = center_shift(z, scalar(dl + 0.25));
    for (std::size_t i = 0; i < zbar.size(); ++i)
      o.require(zbar_up.data()[i] <= zbar.data()[i], "delta monotonicity");

    // gamma homogeneity with power-of-two factors is exact.
    for (double c : {0.5, 2.0, 8.0}) {
      const Tensor zc = manhattan_scores(q, k, scalar(c * g));
      for (std::size_t i = 0; i < z.size(); ++i) o.require(zc.data()[i] == c * z.data()[i], "gamma homogeneity");
    }

    // Masked keys are inert.
    std::vector<std::uint8_t> valid(nk, 1);
    valid[eng() % nk] = 0;
    if (std::none_of(valid.begin(), valid.end(), [](std::uint8_t x) { return x != 0; })) valid[0] = 1;
    const AttentionMask mask = key_padding_mask(valid, nq);
    oracle::Mat k2 = km, v2 = vm;
    for (std::size_t j = 0; j < nk; ++j) {
      if (valid[j]) continue;
      for (auto& x : k2[j]) x = 1e3 * (x + 1.0);
      for (auto& x : v2[j]) x = -5e2 * (x - 3.0);
    }
    const Tensor a = inhibitor_attention(q, k, v, scalar(g), scalar(e), scalar(dl), &mask);
    const Tensor b = inhibitor_attention(q, oracle::to_tensor(k2), oracle::to_tensor(v2), scalar(g), scalar(e),
                                         scalar(dl), &mask);
    o.require(bitwise_equal(a.data(), b.data()), "masked-key inertness");
    ++checks;
  }
  o.require(worst_perm <= 1e-12, "key permutation diff " + fmt(worst_perm));
  o.note(std::to_string(checks) + " random instances, permutation diff " + fmt(worst_perm));
  return o;
}

Outcome self_distillation() {
  Outcome o;
  EncoderConfig cfg = EncoderConfig::desk();
  cfg.n_classes = 2;
  const ModelState teacher = ModelState::init(cfg, 17);
  SyntheticTask task;
  task.n_examples = 128;
  const Dataset data = make_synthetic(task);
  TrainSettings ts = builtin_preset("desk/layerwise").train;
  ts.epochs = 1;
  ts.adam.weight_decay = 0.0;  // decay alone would move a zero-gradient student off the fixed point
  double worst = 0.0;
  auto regime_max = [&](const RunResult& r) {
    double m = 0.0;
    for (const auto& ph : r.phases)
      for (double l : ph.losses) m = std::max(m, l);
    return m;
  };
  DistillPlan plan;
  plan.layer_schedule = {0, 1};
  {
    ModelState s = init_student_from_teacher(teacher, Variant::dot_product);
    const auto r = run_layerwise(teacher, s, data, plan, ts);
    const double m = regime_max(r);
    worst = std::max(worst, m);
    o.require(m <= 1e-10, "layerwise fixed point " + fmt(m));
  }
  {
    ModelState s = init_student_from_teacher(teacher, Variant::dot_product);
    plan.regime = Regime::full_layer;
    const double m = regime_max(run_full_layer(teacher, s, data, plan, ts));
    worst = std::max(worst, m);
    o.require(m <= 1e-10, "full-layer fixed point " + fmt(m));
  }
  {
    ModelState s = init_student_from_teacher(teacher, Variant::dot_product);
    plan.regime = Regime::task_specific;
    const double m = regime_max(run_task_specific(teacher, s, data, plan, ts));
    worst = std::max(worst, m);
    o.require(m <= 1e-10, "task-specific fixed point " + fmt(m));
  }
  // Freeze audit: an inhibitor student, default weight decay, schedule [0, 1].
  ModelState s = init_student_from_teacher(teacher, Variant::inhibitor);
  const ModelState before = s.clone();
  TrainSettings audit_ts = builtin_preset("desk/layerwise").train;
  audit_ts.epochs = 1;
  plan.regime = Regime::layerwise;
  const auto r = run_layerwise(teacher, s, data, plan, audit_ts);
  o.require(r.phases.size() == 2 && r.phases[0].layer == 0 && r.phases[1].layer == 1, "phase order [0, 1]");
  for (const auto& ph : r.phases) {
    o.require(ph.frozen_changed.empty(), "no frozen tensor changed in layer " + std::to_string(ph.layer));
    o.require(!ph.changed.empty(), "trainable tensors moved in layer " + std::to_string(ph.layer));
    const std::string prefix = "layer." + std::to_string(ph.layer) + ".attention.head.";
    for (const auto& n : ph.census) o.require(n.rfind(prefix, 0) == 0, "census entry " + n);
  }
  // Independent bitwise check: every tensor outside the two Q/K/V sets kept its bits.
  for (std::size_t i = 0; i < s.parameters().size(); ++i) {
    const auto& p = s.parameters()[i];
    const bool scheduled = p.name.find(".attention.head.") != std::string::npos;
    if (!scheduled)
      o.require(bitwise_equal(p.tensor.data(), before.parameters()[i].tensor.data()), "frozen " + p.name);
  }
  o.note("max fixed-point loss " + fmt(worst) + ", audit phases [" + std::to_string(r.phases[0].layer) + ", " +
         std::to_string(r.phases[1].layer) + "] with " + std::to_string(r.phases[0].census.size()) +
         " tensors each");
  return o;
}

// Scalar-loop attention-output MSE of one layer, averaged over sequences.
double eval_attention_mse(const ModelState& t, const ModelState& s, const Dataset& data, std::size_t layer,
                          std::size_t seq_len) {
  NoGradScope ng;
  const ForwardOptions opts{Mode::eval, nullptr, layer};
  double total = 0.0;
  std::size_t n = 0;
  for (const Batch& b : batch_iter(data, Tokenizer::byte_level(), 32, seq_len, 0, false)) {
    for (std::size_t r = 0; r < b.size; ++r) {
      const Tensor a = forward_sequence(t, b.row_ids(r), b.row_valid(r), opts).attention_outputs.at(layer);
      const Tensor c = forward_sequence(s, b.row_ids(r), b.row_valid(r), opts).attention_outputs.at(layer);
      double acc = 0.0;
      std::size_t rows = 0;
      for (std::size_t i = 0; i < a.rows(); ++i) {
        if (!b.row_valid(r)[i]) continue;
        ++rows;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += (a.at(i, j) - c.at(i, j)) * (a.at(i, j) - c.at(i, j));
      }
      total += acc / static_cast<double>(rows * a.cols());
      ++n;
    }
  }
  return total / static_cast<double>(n);
}

ModelState desk_teacher(const Dataset& train, const Dataset& eval, std::uint64_t seed) {
  RunConfig ft = builtin_preset("desk/finetune");
  EncoderConfig cfg = ft.model;
  cfg.attention_variant = Variant::dot_product;
  cfg.n_classes = 2;
  ModelState t = ModelState::init(cfg, seed);
  ft.train.epochs = 2;
  finetune(t, train, eval, ft.train);
  return t;
}

Outcome desk_distillation() {
  Outcome o;
  const RunConfig lw = builtin_preset("desk/layerwise");
  const RunConfig fl = builtin_preset("desk/fulllayer");
  const auto [train, eval] = split_holdout(make_synthetic(lw.data.synthetic), lw.data.holdout_fraction);
  const ModelState teacher = desk_teacher(train, eval, 1);
  ModelState student = init_student_from_teacher(teacher, Variant::inhibitor);
  o.require(student.config().n_layers == 2 && student.config().d_model == 32, "desk shape");
  const std::size_t seq = lw.train.seq_len;

  for (std::size_t layer = 0; layer < 2; ++layer) {
    const double before = eval_attention_mse(teacher, student, eval, layer, seq);
    DistillPlan plan = lw.plan;
    plan.layer_schedule = {layer};
    const auto r = run_layerwise(teacher, student, train, plan, lw.train);
    const double after = eval_attention_mse(teacher, student, eval, layer, seq);
    const std::size_t steps = r.phases.at(0).losses.size();
    const double ratio = after / before;
    o.require(steps <= 2000, "layer " + std::to_string(layer) + " steps " + std::to_string(steps));
    o.require(ratio <= 0.2, "layer " + std::to_string(layer) + " ratio " + fmt(ratio));
    o.note("layer " + std::to_string(layer) + ": " + fmt(before) + " -> " + fmt(after) + " (ratio " + fmt(ratio) +
           ", " + std::to_string(steps) + " steps)");
  }
  const double h_before = evaluate_hidden_mse(teacher, student, eval, seq);
  const auto r = run_full_layer(teacher, student, train, fl.plan, fl.train);
  const double h_after = evaluate_hidden_mse(teacher, student, eval, seq);
  const auto& losses = r.phases.at(0).losses;
  o.require(h_after < h_before, "full-layer held-out hidden MSE decrease");
  o.require(losses.back() < losses.front(), "full-layer training loss decrease");
  o.note("full-layer hidden MSE " + fmt(h_before) + " -> " + fmt(h_after) + " in " + std::to_string(losses.size()) +
         " steps");
  return o;
}

Outcome desk_finetune() {
  Outcome o;
  const RunConfig ft = builtin_preset("desk/finetune");
  const auto [train, eval] = split_holdout(make_synthetic(ft.data.synthetic), ft.data.holdout_fraction);
  std::string summary;
  for (std::uint64_t seed : {1, 2, 3}) {
    double acc[2] = {0, 0};
    for (int k = 0; k < 2; ++k) {
      EncoderConfig cfg = ft.model;
      cfg.attention_variant = k == 0 ? Variant::dot_product : Variant::inhibitor;
      cfg.n_classes = 2;
      ModelState m = ModelState::init(cfg, seed);
      TrainSettings ts = ft.train;
      ts.seed = seed;
      finetune(m, train, eval, ts);
      acc[k] = evaluate_accuracy(m, eval, ts.seq_len);
    }
    const double gap = 100.0 * (acc[0] - acc[1]);
    o.require(acc[0] >= 0.95, "seed " + std::to_string(seed) + " dot-product accuracy " + fmt(acc[0]));
    o.require(gap <= 5.0, "seed " + std::to_string(seed) + " gap " + fmt(gap) + " points");
    summary += (summary.empty() ? "" : ", ") + std::string("seed ") + std::to_string(seed) + " dot " + fmt(acc[0]) +
               " / inhibitor " + fmt(acc[1]);
  }
  o.note(summary);
  return o;
}

Outcome cost_equivalence() {
  Outcome o;
  std::mt19937_64 eng(2718);
  for (int t = 0; t < 20; ++t) {
    const HeadShape s{1 + eng() % 12, 1 + eng() % 12, 1 + eng() % 12, 1 + eng() % 12};
    for (Variant v : {Variant::inhibitor, Variant::dot_product}) {
      const OpCounters got = instrumented_counts(v, s, eng());
      o.require(got == closed_form_counts(v, s), std::string(to_string(v)) + " counts");
      if (v == Variant::inhibitor) {
        o.require(got.exps == 0, "inhibitor exps");
        o.require(got.mults == s.n_q * s.n_k + s.n_q * s.d_v, "inhibitor mults");
      }
    }
  }
  const OpCounters inh = instrumented_counts(Variant::inhibitor, {2, 2, 2, 2}, 1);
  const OpCounters dot = instrumented_counts(Variant::dot_product, {2, 2, 2, 2}, 1);
  o.require(inh.mults == 8 && dot.mults == 20, "n=d=dv=2 example");
  o.note("20 shapes x 2 variants exact; n=d=dv=2 mults " + std::to_string(inh.mults) + " vs " +
         std::to_string(dot.mults));
  return o;
}

Outcome optimizer_schedule() {
  Outcome o;
  {
    double p[] = {1.0};
    const double g[] = {0.5};
    AdamWMoments st;
    adamw_step(p, g, st, 0.1, AdamWHyper{0.9, 0.999, 1e-8, 0.0}, true);
    o.require(std::abs(p[0] - 0.900000002) <= 1e-12, "adamw hand example " + fmt(p[0]));
  }
  {
    const LrSchedule s{5e-4, 0.05, 100, Decay::cosine};
    o.require(lr_at(5, s) == 5e-4, "warmup endpoint");
    o.require(lr_at(100, s) == 0.0, "cosine endpoint");
    const LrSchedule mid{5e-4, 5.0 / 105.0, 105, Decay::cosine};
    o.require(mid.warmup_steps() == 5 && lr_at(55, mid) == 2.5e-4, "cosine midpoint");
    const LrSchedule lin{2e-5, 0.0, 10, Decay::linear};
    o.require(lr_at(0, lin) == 2e-5 && lr_at(10, lin) == 0.0, "linear endpoints");
  }
  double worst = 0.0;
  {
    // Two distinct micro-batches accumulated vs. one merged batch.
    const EncoderConfig cfg = EncoderConfig::desk();
    const std::vector<std::vector<std::size_t>> rows = {{2, 10, 11, 12}, {2, 40, 41, 7}, {2, 100, 9, 200}, {2, 5, 6, 250}};
    auto loss_over = [&](const ModelState& m, std::size_t from, std::size_t to) {
      std::vector<Tensor> parts;
      for (std::size_t r = from; r < to; ++r) {
        const std::vector<std::uint8_t> valid(rows[r].size(), 1);
        const auto out = forward_sequence(m, rows[r], valid, {});
        parts.push_back(mean(mul(out.hiddens.back(), out.hiddens.back())));
      }
      return scale(add_n(parts), 1.0 / static_cast<double>(to - from));
    };
    ModelState acc = ModelState::init(cfg, 4), merged = ModelState::init(cfg, 4);
    AdamW oa(acc, {}), om(merged, {});
    accumulate_and_step(
        acc, oa, 2, 2,
        [&](std::size_t i) {
          GradTape tape;
          TapeScope scope(tape);
          tape.backward(loss_over(acc, 2 * i, 2 * i + 2));
        },
        [](std::size_t) { return 1e-3; });
    {
      GradTape tape;
      TapeScope scope(tape);
      tape.backward(loss_over(merged, 0, 4));
    }
    om.step(merged, 1e-3);
    for (std::size_t i = 0; i < acc.parameters().size(); ++i) {
      const auto x = acc.parameters()[i].tensor.data(), y = merged.parameters()[i].tensor.data();
      for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(x[k] - y[k]));
    }
    o.require(worst <= 1e-12, "accumulation equivalence " + fmt(worst));
  }
  {
    // Two identical seeded runs agree bit for bit.
    EncoderConfig cfg = EncoderConfig::desk();
    cfg.dropout = 0.1;
    cfg.attention_dropout = 0.1;
    const ModelState teacher = ModelState::init(cfg, 3);
    SyntheticTask task;
    task.n_examples = 96;
    const Dataset data = make_synthetic(task);
    TrainSettings ts = builtin_preset("desk/fulllayer").train;
    ts.epochs = 1;
    ModelState a = init_student_from_teacher(teacher, Variant::inhibitor);
    ModelState b = init_student_from_teacher(teacher, Variant::inhibitor);
    const auto ra = run_full_layer(teacher, a, data, {}, ts);
    const auto rb = run_full_layer(teacher, b, data, {}, ts);
    bool same = ra.phases[0].losses == rb.phases[0].losses;
    for (std::size_t i = 0; i < a.parameters().size(); ++i)
      same = same && bitwise_equal(a.parameters()[i].tensor.data(), b.parameters()[i].tensor.data());
    o.require(same, "bitwise run determinism");
  }
  o.note("adamw example, schedule identities exact; accumulation diff " + fmt(worst) + "; reruns bitwise equal");
  return o;
}

Outcome persistence() {
  Outcome o;
  TempDir tmp;
  EncoderConfig cfg = EncoderConfig::desk();
  cfg.attention_variant = Variant::inhibitor;
  cfg.n_classes = 2;
  const ModelState m = ModelState::init(cfg, 5);
  const fs::path a = tmp.path / "a.ckpt", b = tmp.path / "b.ckpt", bad = tmp.path / "bad.ckpt";
  save_checkpoint(m, a.string());
  const ModelState back = load_checkpoint(a.string());
  bool same = back.config() == cfg && back.parameters().size() == m.parameters().size();
  for (std::size_t i = 0; same && i < m.parameters().size(); ++i)
    same = m.parameters()[i].name == back.parameters()[i].name &&
           bitwise_equal(m.parameters()[i].tensor.data(), back.parameters()[i].tensor.data());
  save_checkpoint(back, b.string());
  const std::string bytes = slurp(a);
  o.require(same && bytes == slurp(b), "round trip");

  // Every header and manifest byte, plus a sample of payload bytes.
  const CheckpointInfo info = inspect_checkpoint(a.string());
  std::vector<std::size_t> offsets(info.blob_offset);
  std::iota(offsets.begin(), offsets.end(), 0);
  std::mt19937_64 eng(8);
  for (int i = 0; i < 400; ++i) offsets.push_back(info.blob_offset + eng() % (bytes.size() - info.blob_offset));
  offsets.push_back(bytes.size() - 1);
  std::size_t missed = 0;
  for (std::size_t off : offsets) {
    std::string flipped = bytes;
    flipped[off] = static_cast<char>(flipped[off] ^ (1u << (off % 8)));
    spit(bad, flipped);
    try {
      load_checkpoint(bad.string());
      ++missed;
    } catch (const CorruptCheckpointError&) {
    }
  }
  o.require(missed == 0, std::to_string(missed) + " undetected flips");

  // Full-scale presets against the published hyperparameter tables.
  struct Row {
    const char* name;
    double lr, warmup;
    std::size_t accumulation, epochs;
    Decay decay;
  };
  const Row rows[] = {{"layerwise", 5e-4, 0.05, 4, 2, Decay::cosine},
                      {"fulllayer", 3e-4, 0.05, 32, 3, Decay::cosine},
                      {"taskkd", 2e-5, 0.0, 0, 3, Decay::linear},
                      {"finetune", 2e-5, 0.0, 1, 3, Decay::linear}};
  const fs::path shipped = fs::path(INHIBITOR_SOURCE_DIR) / "configs";
  for (const Row& r : rows) {
    const RunConfig preset = builtin_preset(r.name);
    const std::string text = serialize_config(preset);
    for (const RunConfig& c : {parse_config(text), load_config((shipped / (std::string(r.name) + ".cfg")).string())}) {
      const std::string who = std::string(r.name) + " ";
      o.require(c == preset, who + "re-serialization");
      o.require(c.model.n_layers == 6 && c.model.d_model == 768 && c.model.d_ffn == 3072 && c.model.n_heads == 12 &&
                    c.model.d_head == 64,
                who + "architecture");
      o.require(c.model.dropout == 0.1 && c.model.attention_dropout == 0.1, who + "dropout");
      o.require(c.train.warmup_ratio == r.warmup && c.train.learning_rate == r.lr, who + "warmup/lr");
      o.require(c.train.batch_size == 16 && c.train.epochs == r.epochs, who + "batch/epochs");
      o.require(c.train.accumulation_steps == r.accumulation, who + "accumulation");
      o.require(c.train.lr_decay == r.decay, who + "decay");
      o.require(c.train.adam.eps == 1e-8 && c.train.adam.beta1 == 0.9 && c.train.adam.beta2 == 0.999, who + "adam");
      if (std::string(r.name) == "taskkd") {
        o.require(c.plan.temperature == 4.0 && c.plan.distill_weight == 0.5 && c.plan.hidden_weight == 0.5,
                  who + "distillation weights");
      }
    }
  }
  o.note("round trip bitwise, " + std::to_string(offsets.size()) + " single-byte flips detected, 4 presets match");
  return o;
}

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"gradient suite", 120, gradient_suite},
      {"forward oracle suite", 60, forward_oracle},
      {"mechanism invariants", 60, mechanism_invariants},
      {"self-distillation fixed points and freeze audit", 300, self_distillation},
      {"desk distillation: attention and hidden-state alignment", 600, desk_distillation},
      {"desk fine-tune: inhibitor within 5 points of dot-product", 600, desk_finetune},
      {"cost-model equivalence", 60, cost_equivalence},
      {"optimizer and schedule", 120, optimizer_schedule},
      {"persistence", 120, persistence},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) out.require(false, "runtime " + fmt(secs) + "s over " + fmt(c.budget_seconds) + "s");
    failed += out.pass ? 0 : 1;
    std::printf("[%s] %s (%.1fs): %s\n", out.pass ? "PASS" : "FAIL", c.name, secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(std::size(criteria)) - failed, std::size(criteria));
  return failed == 0 ? 0 : 1;
}
