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

#include "model/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace ihb {

EncoderConfig EncoderConfig::distilbert() {
  EncoderConfig c;
  c.n_layers = 6;
  c.d_model = 768;
  c.d_ffn = 3072;
  c.n_heads = 12;
  c.d_head = 64;
  c.vocab_size = 30522;
  c.max_seq_len = 512;
  c.dropout = 0.1;
  c.attention_dropout = 0.1;
  return c;
}

void EncoderConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw ContractError(std::string("config: ") + name + " must be >= 1");
  };
  positive(n_layers, "n_layers");
  positive(d_model, "d_model");
  positive(d_ffn, "d_ffn");
  positive(n_heads, "n_heads");
  positive(d_head, "d_head");
  positive(vocab_size, "vocab_size");
  positive(max_seq_len, "max_seq_len");
  if (d_model != n_heads * d_head) {
    throw DimensionError("config: d_model (" + std::to_string(d_model) + ") != n_heads * d_head (" +
                         std::to_string(n_heads * d_head) + ")");
  }
  if (dropout < 0.0 || dropout >= 1.0) throw ContractError("config: dropout must lie in [0,1)");
  if (attention_dropout < 0.0 || attention_dropout >= 1.0) {
    throw ContractError("config: attention_dropout must lie in [0,1)");
  }
  if (!(init_std > 0.0)) throw ContractError("config: init_std must be positive");
  if (!std::isfinite(eta_init)) throw ContractError("config: eta_init must be finite");
}

bool EncoderConfig::same_extents(const EncoderConfig& o) const {
  return n_layers == o.n_layers && d_model == o.d_model && d_ffn == o.d_ffn &&
         n_heads == o.n_heads && d_head == o.d_head && vocab_size == o.vocab_size &&
         max_seq_len == o.max_seq_len && n_classes == o.n_classes;
}

bool decays(ParamRole role) noexcept {
  switch (role) {
    case ParamRole::embedding:
    case ParamRole::w_q:
    case ParamRole::w_k:
    case ParamRole::w_v:
    case ParamRole::w_o:
    case ParamRole::ffn_weight:
    case ParamRole::classifier_weight:
      return true;
    default:
      return false;
  }
}

namespace {

Tensor random_param(std::size_t r, std::size_t c, double stddev, Rng& rng) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = rng.normal(0.0, stddev);
  return make_tensor({r, c}, std::move(v), true);
}

Tensor const_param(std::size_t n, double value) {
  return make_tensor({n}, std::vector<double>(n, value), true);
}

std::vector<std::uint8_t> draw_keep(std::size_t n, double rate, Rng& rng) {
  std::vector<std::uint8_t> keep(n);
  for (auto& k : keep) k = rng.bernoulli(rate) ? 0 : 1;
  return keep;
}

ClassifierParams make_classifier(std::size_t d_model, std::size_t n_classes, double sd, Rng& rng) {
  ClassifierParams c;
  c.pool_w = random_param(d_model, d_model, sd, rng);
  c.pool_b = const_param(d_model, 0.0);
  c.out_w = random_param(d_model, n_classes, sd, rng);
  c.out_b = const_param(n_classes, 0.0);
  return c;
}

Tensor dropout(const Tensor& x, double rate, const ForwardOptions& opts) {
  if (opts.mode != Mode::train || rate <= 0.0) return x;
  return apply_keep_mask(x, draw_keep(x.size(), rate, *opts.rng), 1.0 / (1.0 - rate));
}

}  // namespace

ModelState ModelState::init(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const double sd = config.init_std;
  ModelState s;
  s.config_ = config;
  s.token_embedding = random_param(config.vocab_size, config.d_model, sd, rng);
  s.position_embedding = random_param(config.max_seq_len, config.d_model, sd, rng);
  s.embedding_norm_gain = const_param(config.d_model, 1.0);
  s.embedding_norm_bias = const_param(config.d_model, 0.0);
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    LayerParams p;
    p.attention = HeadParams::init(config.d_model, config.n_heads, config.d_head, sd, rng, config.eta_init);
    p.attention_norm_gain = const_param(config.d_model, 1.0);
    p.attention_norm_bias = const_param(config.d_model, 0.0);
    p.ffn_w1 = random_param(config.d_model, config.d_ffn, sd, rng);
    p.ffn_b1 = const_param(config.d_ffn, 0.0);
    p.ffn_w2 = random_param(config.d_ffn, config.d_model, sd, rng);
    p.ffn_b2 = const_param(config.d_model, 0.0);
    p.output_norm_gain = const_param(config.d_model, 1.0);
    p.output_norm_bias = const_param(config.d_model, 0.0);
    s.layers.push_back(std::move(p));
  }
  if (config.n_classes > 0) s.classifier = make_classifier(config.d_model, config.n_classes, sd, rng);
  s.build_registry();
  return s;
}

void ModelState::attach_classifier(std::size_t n_classes, std::uint64_t seed) {
  if (n_classes == 0) throw ContractError("classifier needs at least one class");
  std::vector<bool> trainable;
  for (const auto& p : registry_) trainable.push_back(p.trainable);
  Rng rng(seed);
  classifier = make_classifier(config_.d_model, n_classes, config_.init_std, rng);
  config_.n_classes = n_classes;
  build_registry();
  for (std::size_t i = 0; i < trainable.size() && i < registry_.size(); ++i) {
    if (registry_[i].name.rfind("classifier.", 0) == 0) continue;
    registry_[i].trainable = trainable[i];
  }
}

void ModelState::build_registry() {
  registry_.clear();
  auto add = [&](std::string name, const Tensor& t, ParamRole role, int layer) {
    registry_.push_back({std::move(name), t, role, layer, true});
  };
  add("embeddings.token", token_embedding, ParamRole::embedding, -1);
  add("embeddings.position", position_embedding, ParamRole::embedding, -1);
  add("embeddings.norm.gain", embedding_norm_gain, ParamRole::norm, -1);
  add("embeddings.norm.bias", embedding_norm_bias, ParamRole::norm, -1);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& p = layers[l];
    const int li = static_cast<int>(l);
    const std::string pre = "layer." + std::to_string(l) + ".";
    for (std::size_t h = 0; h < p.attention.n_heads(); ++h) {
      const std::string hp = pre + "attention.head." + std::to_string(h) + ".";
      add(hp + "w_q", p.attention.w_q[h], ParamRole::w_q, li);
      add(hp + "w_k", p.attention.w_k[h], ParamRole::w_k, li);
      add(hp + "w_v", p.attention.w_v[h], ParamRole::w_v, li);
      add(hp + "gamma", p.attention.gamma[h], ParamRole::gamma, li);
      add(hp + "eta", p.attention.eta[h], ParamRole::eta, li);
      add(hp + "delta", p.attention.delta[h], ParamRole::delta, li);
    }
    add(pre + "attention.w_o", p.attention.w_o, ParamRole::w_o, li);
    add(pre + "attention_norm.gain", p.attention_norm_gain, ParamRole::norm, li);
    add(pre + "attention_norm.bias", p.attention_norm_bias, ParamRole::norm, li);
    add(pre + "ffn.w1", p.ffn_w1, ParamRole::ffn_weight, li);
    add(pre + "ffn.b1", p.ffn_b1, ParamRole::ffn_bias, li);
    add(pre + "ffn.w2", p.ffn_w2, ParamRole::ffn_weight, li);
    add(pre + "ffn.b2", p.ffn_b2, ParamRole::ffn_bias, li);
    add(pre + "output_norm.gain", p.output_norm_gain, ParamRole::norm, li);
    add(pre + "output_norm.bias", p.output_norm_bias, ParamRole::norm, li);
  }
  if (classifier) {
    add("classifier.pool.w", classifier->pool_w, ParamRole::classifier_weight, -1);
    add("classifier.pool.b", classifier->pool_b, ParamRole::classifier_bias, -1);
    add("classifier.out.w", classifier->out_w, ParamRole::classifier_weight, -1);
    add("classifier.out.b", classifier->out_b, ParamRole::classifier_bias, -1);
  }
}

ModelState ModelState::clone() const {
  ModelState s;
  s.config_ = config_;
  auto c = [](const Tensor& t) { return t.detach().set_requires_grad(true); };
  s.token_embedding = c(token_embedding);
  s.position_embedding = c(position_embedding);
  s.embedding_norm_gain = c(embedding_norm_gain);
  s.embedding_norm_bias = c(embedding_norm_bias);
  for (const auto& p : layers) {
    LayerParams q;
    for (std::size_t h = 0; h < p.attention.n_heads(); ++h) {
      q.attention.w_q.push_back(c(p.attention.w_q[h]));
      q.attention.w_k.push_back(c(p.attention.w_k[h]));
      q.attention.w_v.push_back(c(p.attention.w_v[h]));
      q.attention.gamma.push_back(c(p.attention.gamma[h]));
      q.attention.eta.push_back(c(p.attention.eta[h]));
      q.attention.delta.push_back(c(p.attention.delta[h]));
    }
    q.attention.w_o = c(p.attention.w_o);
    q.attention_norm_gain = c(p.attention_norm_gain);
    q.attention_norm_bias = c(p.attention_norm_bias);
    q.ffn_w1 = c(p.ffn_w1);
    q.ffn_b1 = c(p.ffn_b1);
    q.ffn_w2 = c(p.ffn_w2);
    q.ffn_b2 = c(p.ffn_b2);
    q.output_norm_gain = c(p.output_norm_gain);
    q.output_norm_bias = c(p.output_norm_bias);
    s.layers.push_back(std::move(q));
  }
  if (classifier) {
    s.classifier = ClassifierParams{c(classifier->pool_w), c(classifier->pool_b),
                                    c(classifier->out_w), c(classifier->out_b)};
  }
  s.build_registry();
  for (std::size_t i = 0; i < registry_.size(); ++i) {
    s.registry_[i].trainable = registry_[i].trainable;
    s.registry_[i].tensor.set_requires_grad(registry_[i].trainable);
  }
  return s;
}

const NamedParam& ModelState::parameter(const std::string& name) const {
  for (const auto& p : registry_)
    if (p.name == name) return p;
  throw ContractError("no parameter named '" + name + "'");
}

void ModelState::clear_grads() {
  for (auto& p : registry_) p.tensor.clear_grad();
}

// ---------------------------------------------------------------------------

SequenceOutput forward_sequence(const ModelState& state, std::span<const std::size_t> ids,
                                std::span<const std::uint8_t> valid, const ForwardOptions& opts) {
  const auto& cfg = state.config();
  const std::size_t n = ids.size();
  if (n == 0) throw InputError("empty token sequence");
  if (n > cfg.max_seq_len) {
    throw InputError("sequence length " + std::to_string(n) + " exceeds max_seq_len " +
                     std::to_string(cfg.max_seq_len));
  }
  if (valid.size() != n) throw InputError("validity flags do not match sequence length");
  for (std::size_t id : ids) {
    if (id >= cfg.vocab_size) {
      throw InputError("token id " + std::to_string(id) + " outside vocabulary of " +
                       std::to_string(cfg.vocab_size));
    }
  }
  const bool training = opts.mode == Mode::train;
  if (training && (cfg.dropout > 0.0 || cfg.attention_dropout > 0.0) && !opts.rng) {
    throw ContractError("train-mode forward with dropout needs a random stream");
  }
  const AttentionMask mask = key_padding_mask(valid, n);
  validate_attention_mask(mask, n, n);

  std::vector<std::size_t> positions(n);
  std::iota(positions.begin(), positions.end(), std::size_t{0});

  SequenceOutput out;
  Tensor h = add(gather_rows(state.token_embedding, ids), gather_rows(state.position_embedding, positions));
  h = dropout(layer_norm(h, state.embedding_norm_gain, state.embedding_norm_bias), cfg.dropout, opts);
  out.hiddens.push_back(h);

  for (std::size_t l = 0; l < state.layers.size(); ++l) {
    const auto& p = state.layers[l];
    const Tensor a = multi_head_forward(h, p.attention, &mask, state.variant(),
                                        training ? cfg.attention_dropout : 0.0, opts.rng);
    out.attention_outputs.push_back(a);
    if (opts.stop_after_attention_of && *opts.stop_after_attention_of == l) return out;
    const Tensor h1 =
        layer_norm(add(h, dropout(a, cfg.dropout, opts)), p.attention_norm_gain, p.attention_norm_bias);
    const Tensor f = add_rowvec(matmul(gelu(add_rowvec(matmul(h1, p.ffn_w1), p.ffn_b1)), p.ffn_w2), p.ffn_b2);
    h = layer_norm(add(h1, dropout(f, cfg.dropout, opts)), p.output_norm_gain, p.output_norm_bias);
    out.hiddens.push_back(h);
  }

  if (state.classifier) {
    const auto& c = *state.classifier;
    const std::size_t first[] = {0};
    const Tensor pooled = tanh(add_rowvec(matmul(gather_rows(h, first), c.pool_w), c.pool_b));
    out.logits = add_rowvec(matmul(dropout(pooled, cfg.dropout, opts), c.out_w), c.out_b);
  }
  return out;
}

std::vector<SequenceOutput> model_forward(const ModelState& state, const Batch& batch,
                                          const ForwardOptions& opts) {
  std::vector<SequenceOutput> outs;
  outs.reserve(batch.size);
  for (std::size_t r = 0; r < batch.size; ++r) {
    outs.push_back(forward_sequence(state, batch.row_ids(r), batch.row_valid(r), opts));
  }
  return outs;
}

Tensor batch_logits(const std::vector<SequenceOutput>& outputs) {
  std::vector<Tensor> rows;
  rows.reserve(outputs.size());
  for (const auto& o : outputs) {
    if (!o.logits.defined()) throw ContractError("model has no classifier head");
    rows.push_back(o.logits);
  }
  return concat_rows(rows);
}

// ---------------------------------------------------------------------------

ModelState init_student_from_teacher(const ModelState& teacher, Variant variant) {
  ModelState student = teacher.clone();
  for (auto& layer : student.layers) layer.attention.reset_scalars(student.config().eta_init);
  for (auto& p : student.parameters()) {
    p.trainable = true;
    p.tensor.set_requires_grad(true);
  }
  student.set_variant(variant);
  return student;
}

ModelState init_student_from_teacher(const ModelState& teacher, const EncoderConfig& student) {
  if (!teacher.config().same_extents(student)) {
    throw ContractError("student config extents differ from the teacher's");
  }
  return init_student_from_teacher(teacher, student.attention_variant);
}

std::vector<std::string> set_trainable(ModelState& state, const TrainableSelector& selector) {
  using K = TrainableSelector::Kind;
  if (selector.kind == K::qkv_of_layer && selector.layer >= state.layers.size()) {
    throw ContractError("layer index " + std::to_string(selector.layer) + " out of range for " +
                        std::to_string(state.layers.size()) + " layers");
  }
  if (selector.kind == K::classifier_only && !state.classifier) {
    throw ContractError("classifier_only selected on a model without a classifier");
  }
  const bool inhibitor = state.variant() == Variant::inhibitor;
  std::vector<std::string> census;
  for (auto& p : state.parameters()) {
    bool on = false;
    switch (selector.kind) {
      case K::all:
        on = true;
        break;
      case K::encoder:
        on = p.role != ParamRole::classifier_weight && p.role != ParamRole::classifier_bias;
        break;
      case K::classifier_only:
        on = p.role == ParamRole::classifier_weight || p.role == ParamRole::classifier_bias;
        break;
      case K::qkv_of_layer: {
        if (p.layer != static_cast<int>(selector.layer)) break;
        const bool proj = p.role == ParamRole::w_q || p.role == ParamRole::w_k || p.role == ParamRole::w_v;
        const bool scalar =
            p.role == ParamRole::gamma || p.role == ParamRole::eta || p.role == ParamRole::delta;
        on = proj || (inhibitor && scalar);
        break;
      }
    }
    // Frozen tensors also stop requiring grad so no tape work is spent on them.
    p.trainable = on;
    p.tensor.set_requires_grad(on);
    if (on) census.push_back(p.name);
  }
  return census;
}

}  // namespace ihb
