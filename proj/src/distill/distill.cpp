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

#include "distill/distill.hpp"

#include <algorithm>
#include <cstring>
#include <json.hpp>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "optim/optim.hpp"

namespace ihb {

std::string to_jsonl(const LossRecord& r) {
  const nlohmann::ordered_json j{{"step", r.step}, {"phase", r.phase}, {"layer", r.layer},
                                 {"loss", r.loss}, {"lr", r.lr},       {"seed", r.seed}};
  return j.dump();
}

Tensor attention_output_mse(const Tensor& teacher, const Tensor& student, std::span<const std::uint8_t> valid) {
  if (teacher.shape() != student.shape()) {
    throw ContractError("attention_output_mse: teacher and student shapes differ");
  }
  if (!valid.empty() && valid.size() != student.rows()) {
    throw ContractError("attention_output_mse: mask length does not match the row count");
  }
  return mse_loss(student, teacher, valid);
}

Tensor hidden_state_mse(const SequenceOutput& teacher, const SequenceOutput& student,
                        std::span<const std::size_t> mapping, std::span<const std::uint8_t> valid) {
  const std::size_t s_layers = student.hiddens.size() - 1;
  const std::size_t t_layers = teacher.hiddens.size() - 1;
  if (mapping.size() != s_layers) {
    throw ContractError("hidden_state_mse: mapping covers " + std::to_string(mapping.size()) + " of " +
                        std::to_string(s_layers) + " student layers");
  }
  std::vector<Tensor> terms;
  terms.reserve(s_layers);
  for (std::size_t s = 0; s < s_layers; ++s) {
    if (mapping[s] >= t_layers) {
      throw ContractError("student layer " + std::to_string(s) + " maps past the teacher's " +
                          std::to_string(t_layers) + " layers");
    }
    terms.push_back(attention_output_mse(teacher.hiddens[mapping[s] + 1], student.hiddens[s + 1], valid));
  }
  return scale(add_n(terms), 1.0 / static_cast<double>(s_layers));
}

Tensor soft_prob_distill_loss(const Tensor& teacher_logits, const Tensor& student_logits, double temperature) {
  if (teacher_logits.shape() != student_logits.shape()) {
    throw ContractError("soft_prob_distill_loss: logit shapes differ");
  }
  return soft_kl(teacher_logits, student_logits, temperature);
}

std::vector<std::string> changed_parameters(const ModelState& before, const ModelState& after) {
  const auto& a = before.parameters();
  const auto& b = after.parameters();
  if (a.size() != b.size()) throw ContractError("changed_parameters: models differ in structure");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto x = a[i].tensor.data();
    const auto y = b[i].tensor.data();
    if (x.size() != y.size() || std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0) {
      out.push_back(a[i].name);
    }
  }
  return out;
}

void check_labels(const ModelState& model, const Dataset& labeled) {
  const std::size_t c = model.config().n_classes;
  if (c == 0) throw ContractError("model has no classifier head");
  for (std::size_t i = 0; i < labeled.examples.size(); ++i) {
    const auto& l = labeled.examples[i].label;
    if (!l) throw InputError("example " + std::to_string(i) + " has no label");
    if (*l >= c) {
      throw InputError("example " + std::to_string(i) + " has label " + std::to_string(*l) +
                       " but the model has " + std::to_string(c) + " classes");
    }
  }
}

namespace {

using BatchLoss = std::function<Tensor(const Batch&, Rng&)>;

constexpr std::uint64_t kShuffleSalt = 0x5eed0001;
constexpr std::uint64_t kDropoutSalt = 0x5eed0002;

std::vector<Batch> epoch_batches(const Dataset& data, const TrainSettings& ts, std::size_t epoch, std::uint64_t salt) {
  Rng base(ts.seed);
  const std::uint64_t seed = base.fork(kShuffleSalt + salt * 1000003 + epoch).next_u64();
  return batch_iter(data, Tokenizer::byte_level(), ts.batch_size, ts.seq_len, seed);
}

std::size_t planned_steps(std::size_t micro_batches, const TrainSettings& ts) {
  const std::size_t acc = ts.effective_accumulation();
  std::size_t steps = (micro_batches + acc - 1) / acc;
  if (ts.max_steps > 0) steps = std::min(steps, ts.max_steps);
  return steps;
}

/// Runs one phase: `epochs` passes over `data`, accumulating micro-batch
/// gradients and stepping a fresh AdamW on the current trainable set.
std::vector<double> train_phase(ModelState& model, const Dataset& data, const TrainSettings& ts,
                                std::size_t epochs, std::uint64_t salt, const std::string& phase, int layer,
                                const BatchLoss& loss_fn, const LossSink& sink,
                                const std::function<void(std::size_t)>& after_epoch = {}) {
  const std::size_t per_epoch = (data.examples.size() + ts.batch_size - 1) / ts.batch_size;
  const std::size_t acc = ts.effective_accumulation();
  const std::size_t total = planned_steps(per_epoch * epochs, ts);
  LrSchedule sched{ts.learning_rate, ts.warmup_ratio, std::max<std::size_t>(total, 1), ts.lr_decay};
  AdamW opt(model, ts.adam);
  GradientAccumulator accum(model);
  Rng drop = Rng(ts.seed).fork(kDropoutSalt + salt);

  std::vector<double> losses;
  double window_loss = 0.0;
  std::size_t applied = 0;
  model.clear_grads();

  auto apply = [&] {
    const double lr = lr_at(applied, sched);
    const double l = window_loss / static_cast<double>(accum.pending());
    accum.write_mean(model);
    opt.step(model, lr);
    model.clear_grads();
    losses.push_back(l);
    if (sink) sink(LossRecord{applied, phase, layer, l, lr, ts.seed});
    ++applied;
    window_loss = 0.0;
  };

  for (std::size_t e = 0; e < epochs && applied < total; ++e) {
    for (const Batch& b : epoch_batches(data, ts, e, salt)) {
      if (applied >= total) break;
      GradTape tape;
      double value = 0.0;
      {
        TapeScope scope(tape);
        const Tensor l = loss_fn(b, drop);
        value = l.item();
        tape.backward(l);
      }
      if (!std::isfinite(value)) throw NumericError(phase + ": non-finite loss at step " + std::to_string(applied));
      window_loss += value;
      accum.add(model);
      if (accum.pending() == acc) apply();
    }
    if (accum.pending() > 0 && applied < total) apply();
    if (after_epoch) after_epoch(e);
  }
  return losses;
}

ForwardOptions train_opts(Rng& rng) { return ForwardOptions{Mode::train, &rng, std::nullopt}; }

void check_pair(const ModelState& teacher, const ModelState& student) {
  if (!teacher.config().same_extents(student.config())) {
    throw ContractError("teacher and student configurations differ in shape");
  }
}

template <class F>
Tensor batch_mean(const Batch& b, F&& per_row) {
  std::vector<Tensor> terms;
  terms.reserve(b.size);
  for (std::size_t r = 0; r < b.size; ++r) terms.push_back(per_row(r));
  return scale(add_n(terms), 1.0 / static_cast<double>(b.size));
}

PhaseResult audit(const std::string& phase, int layer, std::vector<double> losses, const ModelState& before,
                  const ModelState& after, std::vector<std::string> census) {
  PhaseResult r;
  r.phase = phase;
  r.layer = layer;
  r.losses = std::move(losses);
  r.changed = changed_parameters(before, after);
  for (const auto& name : r.changed) {
    if (std::find(census.begin(), census.end(), name) == census.end()) r.frozen_changed.push_back(name);
  }
  r.census = std::move(census);
  return r;
}

}  // namespace

RunResult run_layerwise(const ModelState& teacher, ModelState& student, const Dataset& corpus,
                        const DistillPlan& plan, const TrainSettings& ts, const LossSink& sink) {
  check_pair(teacher, student);
  plan.validate(student.config().n_layers, teacher.config().n_layers);
  RunResult result;
  for (std::size_t layer : plan.resolved_schedule(student.config().n_layers)) {
    auto census = set_trainable(student, TrainableSelector::qkv_of_layer(layer));
    const ModelState before = student.clone();
    const ForwardOptions teacher_opts{Mode::eval, nullptr, layer};
    auto loss_fn = [&](const Batch& b, Rng& rng) {
      return batch_mean(b, [&](std::size_t r) {
        SequenceOutput t;
        {
          NoGradScope ng;
          t = forward_sequence(teacher, b.row_ids(r), b.row_valid(r), teacher_opts);
        }
        ForwardOptions so = train_opts(rng);
        so.stop_after_attention_of = layer;
        const auto s = forward_sequence(student, b.row_ids(r), b.row_valid(r), so);
        return attention_output_mse(t.attention_outputs[layer], s.attention_outputs[layer], b.row_valid(r));
      });
    };
    auto losses = train_phase(student, corpus, ts, plan.epochs_per_layer, 1 + layer, "layerwise",
                              static_cast<int>(layer), loss_fn, sink);
    result.steps += losses.size();
    result.phases.push_back(audit("layerwise", static_cast<int>(layer), std::move(losses), before, student,
                                  std::move(census)));
  }
  set_trainable(student, TrainableSelector::all());
  return result;
}

RunResult run_full_layer(const ModelState& teacher, ModelState& student, const Dataset& corpus,
                         const DistillPlan& plan, const TrainSettings& ts, const LossSink& sink) {
  (void)plan;
  if (teacher.config().n_layers != student.config().n_layers) {
    throw ContractError("full-layer alignment needs equal depth: teacher has " +
                        std::to_string(teacher.config().n_layers) + " layers, student " +
                        std::to_string(student.config().n_layers));
  }
  check_pair(teacher, student);
  std::vector<std::size_t> identity(student.config().n_layers);
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  auto census = set_trainable(student, TrainableSelector::encoder());
  const ModelState before = student.clone();
  const ForwardOptions teacher_opts{Mode::eval, nullptr, std::nullopt};
  auto loss_fn = [&](const Batch& b, Rng& rng) {
    return batch_mean(b, [&](std::size_t r) {
      SequenceOutput t;
      {
        NoGradScope ng;
        t = forward_sequence(teacher, b.row_ids(r), b.row_valid(r), teacher_opts);
      }
      const auto s = forward_sequence(student, b.row_ids(r), b.row_valid(r), train_opts(rng));
      return hidden_state_mse(t, s, identity, b.row_valid(r));
    });
  };
  RunResult result;
  auto losses = train_phase(student, corpus, ts, ts.epochs, 100, "full_layer", -1, loss_fn, sink);
  result.steps = losses.size();
  result.phases.push_back(audit("full_layer", -1, std::move(losses), before, student, std::move(census)));
  set_trainable(student, TrainableSelector::all());
  return result;
}

Tensor task_specific_loss(const ModelState& teacher, const ModelState& student, const Batch& batch,
                          const DistillPlan& plan, const ForwardOptions& student_opts) {
  if (teacher.config().d_model != student.config().d_model) {
    throw ContractError("hidden-state alignment needs equal d_model");
  }
  if (teacher.config().n_classes != student.config().n_classes || student.config().n_classes == 0) {
    throw ContractError("teacher and student need matching classifier heads");
  }
  const auto mapping = plan.resolved_mapping(student.config().n_layers, teacher.config().n_layers);
  std::vector<SequenceOutput> t_out;
  {
    NoGradScope ng;
    t_out = model_forward(teacher, batch, ForwardOptions{});
  }
  const auto s_out = model_forward(student, batch, student_opts);
  const Tensor soft = soft_prob_distill_loss(batch_logits(t_out), batch_logits(s_out), plan.temperature);
  const Tensor hidden = batch_mean(batch, [&](std::size_t r) {
    return hidden_state_mse(t_out[r], s_out[r], mapping, batch.row_valid(r));
  });
  const Tensor parts[] = {scale(soft, plan.distill_weight), scale(hidden, plan.hidden_weight)};
  return add_n(parts);
}

RunResult run_task_specific(const ModelState& teacher, ModelState& student, const Dataset& labeled,
                            const DistillPlan& plan, const TrainSettings& ts, const LossSink& sink) {
  plan.validate(student.config().n_layers, teacher.config().n_layers);
  check_labels(student, labeled);
  auto census = set_trainable(student, TrainableSelector::all());
  const ModelState before = student.clone();
  auto loss_fn = [&](const Batch& b, Rng& rng) { return task_specific_loss(teacher, student, b, plan, train_opts(rng)); };
  RunResult result;
  auto losses = train_phase(student, labeled, ts, ts.epochs, 200, "task_specific", -1, loss_fn, sink);
  result.steps = losses.size();
  result.phases.push_back(audit("task_specific", -1, std::move(losses), before, student, std::move(census)));
  return result;
}

FinetuneResult finetune(ModelState& model, const Dataset& train_data, const Dataset& eval_data,
                        const TrainSettings& ts, const LossSink& sink) {
  check_labels(model, train_data);
  if (!eval_data.examples.empty()) check_labels(model, eval_data);
  set_trainable(model, TrainableSelector::all());
  FinetuneResult result;
  auto loss_fn = [&](const Batch& b, Rng& rng) {
    return cross_entropy(batch_logits(model_forward(model, b, train_opts(rng))), b.labels);
  };
  auto after_epoch = [&](std::size_t) {
    const Dataset& probe = eval_data.examples.empty() ? train_data : eval_data;
    result.epoch_accuracy.push_back(evaluate_accuracy(model, probe, ts.seq_len));
  };
  result.losses = train_phase(model, train_data, ts, ts.epochs, 300, "finetune", -1, loss_fn, sink, after_epoch);
  return result;
}

double evaluate_accuracy(const ModelState& model, const Dataset& data, std::size_t seq_len, std::size_t batch_size) {
  check_labels(model, data);
  NoGradScope ng;
  std::size_t correct = 0;
  for (const Batch& b : batch_iter(data, Tokenizer::byte_level(), batch_size, seq_len, 0, false)) {
    const auto outs = model_forward(model, b, ForwardOptions{});
    for (std::size_t r = 0; r < b.size; ++r) {
      const auto z = outs[r].logits.data();
      const auto best = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
      if (best == b.labels[r]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.examples.size());
}

double evaluate_hidden_mse(const ModelState& teacher, const ModelState& student, const Dataset& data,
                           std::size_t seq_len, std::size_t batch_size) {
  if (teacher.config().n_layers != student.config().n_layers) {
    throw ContractError("hidden-state comparison needs equal depth");
  }
  check_pair(teacher, student);
  std::vector<std::size_t> identity(student.config().n_layers);
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = i;
  NoGradScope ng;
  double total = 0.0;
  for (const Batch& b : batch_iter(data, Tokenizer::byte_level(), batch_size, seq_len, 0, false)) {
    const auto t = model_forward(teacher, b, ForwardOptions{});
    const auto s = model_forward(student, b, ForwardOptions{});
    for (std::size_t r = 0; r < b.size; ++r) total += hidden_state_mse(t[r], s[r], identity, b.row_valid(r)).item();
  }
  return total / static_cast<double>(data.examples.size());
}

}  // namespace ihb
