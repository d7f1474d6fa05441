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
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "data/config.hpp"
#include "data/dataset.hpp"
#include "distill/plan.hpp"
#include "model/encoder.hpp"

namespace ihb {

/// One JSON-lines loss record; `layer` is -1 for whole-model phases.
struct LossRecord {
  std::size_t step = 0;
  std::string phase;
  int layer = -1;
  double loss = 0.0;
  double lr = 0.0;
  std::uint64_t seed = 0;
};
std::string to_jsonl(const LossRecord& r);
using LossSink = std::function<void(const LossRecord&)>;

/// Mean squared difference over rows with valid[r] != 0 (all rows when
/// `valid` is empty). The teacher side is detached.
Tensor attention_output_mse(const Tensor& teacher, const Tensor& student,
                            std::span<const std::uint8_t> valid = {});

/// Mean over student layers s of the MSE between student hiddens[s + 1] and
/// teacher hiddens[mapping[s] + 1]. Embedding outputs are not compared.
Tensor hidden_state_mse(const SequenceOutput& teacher, const SequenceOutput& student,
                        std::span<const std::size_t> mapping, std::span<const std::uint8_t> valid);

/// T^2 * KL(softmax(teacher/T) || softmax(student/T)), mean over rows.
Tensor soft_prob_distill_loss(const Tensor& teacher_logits, const Tensor& student_logits, double temperature);

struct PhaseResult {
  std::string phase;
  int layer = -1;
  std::vector<double> losses;            // one per applied optimizer step
  std::vector<std::string> census;       // trainable tensors in this phase
  std::vector<std::string> changed;      // tensors whose bits changed
  std::vector<std::string> frozen_changed;  // changed but not trainable (must stay empty)
};

struct RunResult {
  std::vector<PhaseResult> phases;
  std::size_t steps = 0;
};

/// Bottom-up: for each scheduled layer, only that layer's Q/K/V (and the
/// inhibitor scalars) train against the teacher's attention output there.
RunResult run_layerwise(const ModelState& teacher, ModelState& student, const Dataset& corpus,
                        const DistillPlan& plan, const TrainSettings& train, const LossSink& sink = {});

/// All parameters train on the mean hidden-state MSE over layers, identity mapping.
RunResult run_full_layer(const ModelState& teacher, ModelState& student, const Dataset& corpus,
                         const DistillPlan& plan, const TrainSettings& train, const LossSink& sink = {});

/// distill_weight * soft loss + hidden_weight * mapped hidden-state MSE for
/// one batch, recorded on the active tape. Only the student is differentiated.
Tensor task_specific_loss(const ModelState& teacher, const ModelState& student, const Batch& batch,
                          const DistillPlan& plan, const ForwardOptions& student_opts);

RunResult run_task_specific(const ModelState& teacher, ModelState& student, const Dataset& labeled,
                            const DistillPlan& plan, const TrainSettings& train, const LossSink& sink = {});

struct FinetuneResult {
  std::vector<double> losses;
  std::vector<double> epoch_accuracy;  // on the held-out split
};

/// Cross-entropy training of every parameter; accuracy after each epoch.
FinetuneResult finetune(ModelState& model, const Dataset& train_data, const Dataset& eval_data,
                        const TrainSettings& train, const LossSink& sink = {});

/// Argmax accuracy in eval mode; ties resolve to the lowest class index.
double evaluate_accuracy(const ModelState& model, const Dataset& data, std::size_t seq_len,
                         std::size_t batch_size = 32);
/// Mean over examples of the identity-mapped hidden-state MSE.
double evaluate_hidden_mse(const ModelState& teacher, const ModelState& student, const Dataset& data,
                           std::size_t seq_len, std::size_t batch_size = 32);

/// Names of parameters whose bits differ between two models of equal shape.
std::vector<std::string> changed_parameters(const ModelState& before, const ModelState& after);

/// Checks that `labeled` only carries labels below the model's class count.
void check_labels(const ModelState& model, const Dataset& labeled);

}  // namespace ihb
