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

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "attention/attention.hpp"
#include "core/random.hpp"
#include "core/tensor.hpp"
#include "data/batch.hpp"

namespace ihb {

/// Architecture hyperparameters. Defaults are the desk-scale model; the
/// DistilBERT-sized shape is available from distilbert().
struct EncoderConfig {
  std::size_t n_layers = 2;
  std::size_t d_model = 32;
  std::size_t d_ffn = 64;
  std::size_t n_heads = 4;
  std::size_t d_head = 8;
  std::size_t vocab_size = 260;
  std::size_t max_seq_len = 64;
  double dropout = 0.0;
  double attention_dropout = 0.0;
  Variant attention_variant = Variant::dot_product;
  std::size_t n_classes = 0;  // 0: no classifier head
  double init_std = 0.02;
  double eta_init = 1.0;  // initial eta of every inhibitor head

  static EncoderConfig desk() { return {}; }
  static EncoderConfig distilbert();

  void validate() const;
  bool same_extents(const EncoderConfig& other) const;
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

enum class ParamRole {
  embedding,
  w_q,
  w_k,
  w_v,
  w_o,
  gamma,
  eta,
  delta,
  norm,
  ffn_weight,
  ffn_bias,
  classifier_weight,
  classifier_bias,
};

/// True for roles that take decoupled weight decay (matrices only).
bool decays(ParamRole role) noexcept;

struct NamedParam {
  std::string name;
  Tensor tensor;
  ParamRole role;
  int layer;  // -1 outside the layer stack
  bool trainable = true;
};

struct LayerParams {
  HeadParams attention;
  Tensor attention_norm_gain, attention_norm_bias;
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Tensor output_norm_gain, output_norm_bias;
};

struct ClassifierParams {
  Tensor pool_w, pool_b, out_w, out_b;
};

enum class Mode { train, eval };

/// Full learnable state of an encoder. Tensors are shared handles, so
/// copying is disabled; use clone() for an independent model.
class ModelState {
 public:
  static ModelState init(const EncoderConfig& config, std::uint64_t seed);

  ModelState(ModelState&&) = default;
  ModelState& operator=(ModelState&&) = default;
  ModelState(const ModelState&) = delete;
  ModelState& operator=(const ModelState&) = delete;

  ModelState clone() const;

  const EncoderConfig& config() const { return config_; }
  Variant variant() const { return config_.attention_variant; }
  void set_variant(Variant v) { config_.attention_variant = v; }

  Tensor token_embedding, position_embedding, embedding_norm_gain, embedding_norm_bias;
  std::vector<LayerParams> layers;
  std::optional<ClassifierParams> classifier;

  /// Canonical, deterministic parameter list (checkpoint order).
  std::vector<NamedParam>& parameters() { return registry_; }
  const std::vector<NamedParam>& parameters() const { return registry_; }
  const NamedParam& parameter(const std::string& name) const;

  /// Drops gradient buffers on every parameter.
  void clear_grads();

  /// Replaces any classifier head with a freshly initialized one.
  void attach_classifier(std::size_t n_classes, std::uint64_t seed);

 private:
  ModelState() = default;
  void build_registry();

  EncoderConfig config_;
  std::vector<NamedParam> registry_;
};

/// Output of one sequence. hiddens[0] is the embedding output and
/// hiddens[l + 1] the output of layer l; attention_outputs[l] is layer l's
/// attention sublayer after the output projection, before the residual.
struct SequenceOutput {
  std::vector<Tensor> hiddens;
  std::vector<Tensor> attention_outputs;
  Tensor logits;  // [1 x n_classes] when a classifier is attached
};

struct ForwardOptions {
  Mode mode = Mode::eval;
  Rng* rng = nullptr;  // required in train mode when any dropout rate > 0
  // Stop right after the attention sublayer of this layer.
  std::optional<std::size_t> stop_after_attention_of = std::nullopt;
};

SequenceOutput forward_sequence(const ModelState& state, std::span<const std::size_t> ids,
                                std::span<const std::uint8_t> valid, const ForwardOptions& opts);

std::vector<SequenceOutput> model_forward(const ModelState& state, const Batch& batch,
                                          const ForwardOptions& opts);

/// Stacks per-sequence logits into [batch x n_classes].
Tensor batch_logits(const std::vector<SequenceOutput>& outputs);

ModelState init_student_from_teacher(const ModelState& teacher, Variant variant);
ModelState init_student_from_teacher(const ModelState& teacher, const EncoderConfig& student);

struct TrainableSelector {
  enum class Kind { qkv_of_layer, all, encoder, classifier_only } kind = Kind::all;
  std::size_t layer = 0;

  static TrainableSelector qkv_of_layer(std::size_t l) { return {Kind::qkv_of_layer, l}; }
  static TrainableSelector all() { return {Kind::all, 0}; }
  /// Everything except the classifier head.
  static TrainableSelector encoder() { return {Kind::encoder, 0}; }
  static TrainableSelector classifier_only() { return {Kind::classifier_only, 0}; }
};

/// Marks exactly the selected parameters trainable and returns their names.
/// For the inhibitor variant, qkv_of_layer also selects that layer's
/// gamma/eta/delta scalars.
std::vector<std::string> set_trainable(ModelState& state, const TrainableSelector& selector);

}  // namespace ihb
