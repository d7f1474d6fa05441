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
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ihb {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& shape);
std::size_t shape_size(const Shape& shape);

struct TensorNode {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until a backward sweep touches it
  bool requires_grad = false;
  std::uint64_t id = 0;  // creation order; the tape uses it to prove acyclicity
};

/// Dense row-major array of doubles. Copies share the underlying node, so a
/// Tensor behaves like a handle into the differentiation graph. Use clone()
/// for an independent copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor scalar(double value);
  static Tensor vector(std::initializer_list<double> values);
  static Tensor matrix(std::initializer_list<std::initializer_list<double>> rows);

  bool defined() const noexcept { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  std::size_t rows() const;  // rank-2 only
  std::size_t cols() const;  // rank-2 only

  std::span<const double> data() const;
  // Writable view; reserved for parameter updates, checkpoint loading and
  // input construction. Never mutate a tensor that is recorded on a live tape.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t i, std::size_t j) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;
  std::span<double> mutable_grad();  // allocates a zeroed buffer on first use
  void zero_grad();
  void clear_grad();

  Tensor detach() const;
  Tensor clone() const;

  std::uint64_t id() const;
  bool same_node(const Tensor& other) const noexcept { return node_ == other.node_; }
  const std::shared_ptr<TensorNode>& node() const noexcept { return node_; }

  /// Throws NumericError naming `what` if any element is NaN or infinite.
  void check_finite(std::string_view what) const;

 private:
  explicit Tensor(std::shared_ptr<TensorNode> node) : node_(std::move(node)) {}
  friend Tensor make_tensor(Shape shape, std::vector<double> values, bool requires_grad);

  std::shared_ptr<TensorNode> node_;
};

Tensor make_tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

/// Ordered log of executed primitives. Records are appended as operations run
/// under an active TapeScope, so every operand precedes its consumers and a
/// reverse sweep is a valid reverse-mode traversal.
class GradTape {
 public:
  using BackwardFn = std::function<void()>;

  GradTape() = default;
  GradTape(const GradTape&) = delete;
  GradTape& operator=(const GradTape&) = delete;

  void record(std::vector<std::shared_ptr<TensorNode>> inputs,
              std::shared_ptr<TensorNode> output, BackwardFn fn);

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape once in reverse. A second
  /// call without reset() is a contract error.
  void backward(const Tensor& loss);

  void reset();
  std::size_t size() const noexcept { return records_.size(); }
  bool consumed() const noexcept { return consumed_; }

 private:
  struct Record {
    std::vector<std::shared_ptr<TensorNode>> inputs;
    std::shared_ptr<TensorNode> output;
    BackwardFn fn;
  };
  std::vector<Record> records_;
  bool consumed_ = false;
};

/// Makes `tape` the recording target for operations on this thread.
class TapeScope {
 public:
  explicit TapeScope(GradTape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  GradTape* previous_;
};

/// Suspends recording on this thread (teacher forwards, evaluation).
class NoGradScope {
 public:
  NoGradScope();
  ~NoGradScope();
  NoGradScope(const NoGradScope&) = delete;
  NoGradScope& operator=(const NoGradScope&) = delete;

 private:
  GradTape* previous_;
};

GradTape* active_tape() noexcept;

namespace detail {

// True when an op over `inputs` must be recorded on the active tape.
bool needs_grad(std::initializer_list<const Tensor*> inputs);
bool needs_grad(std::span<const Tensor> inputs);

// Registers `fn` as the backward of `output`. `fn` reads output.grad and
// accumulates into input grads via grad_buffer().
void record(std::initializer_list<const Tensor*> inputs, const Tensor& output,
            GradTape::BackwardFn fn);
void record(std::span<const Tensor> inputs, const Tensor& output, GradTape::BackwardFn fn);

// Zero-initialized gradient buffer of `node`, allocated on demand.
std::span<double> grad_buffer(TensorNode& node);

}  // namespace detail

}  // namespace ihb
