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

#include "core/tensor.hpp"

#include <atomic>
#include <cmath>
#include <sstream>

#include "core/error.hpp"

namespace ihb {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::degenerate_reduction: return "degenerate reduction";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::input: return "input error";
    case ErrorKind::config: return "config error";
    case ErrorKind::corrupt_checkpoint: return "corrupt checkpoint";
    case ErrorKind::io: return "io error";
    case ErrorKind::internal: return "internal error";
  }
  return "error";
}

namespace {

std::atomic<std::uint64_t> g_next_id{1};
thread_local GradTape* t_active_tape = nullptr;

TensorNode& checked(const std::shared_ptr<TensorNode>& node) {
  if (!node) throw ContractError("use of an undefined tensor");
  return *node;
}

}  // namespace

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

Tensor make_tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  for (auto e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + shape_str(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + shape_str(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  auto node = std::make_shared<TensorNode>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  node->requires_grad = requires_grad;
  node->id = g_next_id.fetch_add(1, std::memory_order_relaxed);
  return Tensor(std::move(node));
}

Tensor::Tensor(Shape shape, double fill) {
  const auto n = shape_size(shape);
  *this = make_tensor(std::move(shape), std::vector<double>(n, fill));
}

Tensor::Tensor(Shape shape, std::vector<double> values) {
  *this = make_tensor(std::move(shape), std::move(values));
}

Tensor Tensor::scalar(double value) { return make_tensor({1}, {value}); }

Tensor Tensor::vector(std::initializer_list<double> values) {
  return make_tensor({values.size()}, std::vector<double>(values));
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t m = rows.size();
  const std::size_t n = m ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(m * n);
  for (const auto& r : rows) {
    if (r.size() != n) throw DimensionError("ragged matrix literal");
    data.insert(data.end(), r.begin(), r.end());
  }
  return make_tensor({m, n}, std::move(data));
}

const Shape& Tensor::shape() const { return checked(node_).shape; }
std::size_t Tensor::size() const { return checked(node_).data.size(); }

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows() on rank-" + std::to_string(rank()) + " tensor");
  return node_->shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols() on rank-" + std::to_string(rank()) + " tensor");
  return node_->shape[1];
}

std::span<const double> Tensor::data() const { return checked(node_).data; }
std::span<double> Tensor::mutable_data() { return checked(node_).data; }

double Tensor::item() const {
  if (size() != 1) throw ContractError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t i) const { return data()[i]; }
double Tensor::at(std::size_t i, std::size_t j) const { return data()[i * cols() + j]; }

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  checked(node_).requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return !checked(node_).grad.empty(); }
std::span<const double> Tensor::grad() const { return checked(node_).grad; }
std::span<double> Tensor::mutable_grad() { return detail::grad_buffer(checked(node_)); }

void Tensor::zero_grad() {
  auto& n = checked(node_);
  std::fill(n.grad.begin(), n.grad.end(), 0.0);
}

void Tensor::clear_grad() {
  auto& n = checked(node_);
  n.grad.clear();
  n.grad.shrink_to_fit();
}

Tensor Tensor::detach() const { return make_tensor(shape(), node_->data, false); }

Tensor Tensor::clone() const { return make_tensor(shape(), node_->data, node_->requires_grad); }

std::uint64_t Tensor::id() const { return checked(node_).id; }

void Tensor::check_finite(std::string_view what) const {
  const auto d = data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (!std::isfinite(d[i])) {
      throw NumericError(std::string(what) + ": non-finite value at flat index " +
                         std::to_string(i));
    }
  }
}

// ---------------------------------------------------------------------------

void GradTape::record(std::vector<std::shared_ptr<TensorNode>> inputs,
                      std::shared_ptr<TensorNode> output, BackwardFn fn) {
  if (consumed_) throw ContractError("recording onto a consumed tape; call reset() first");
  records_.push_back({std::move(inputs), std::move(output), std::move(fn)});
}

void GradTape::backward(const Tensor& loss) {
  if (consumed_) throw ContractError("backward() called twice on the same tape without reset()");
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? shape_str(loss.shape()) : std::string("<undefined>")));
  }
  bool reachable = loss.requires_grad() && records_.empty();
  for (const auto& r : records_) {
    for (const auto& in : r.inputs) {
      if (in->id >= r.output->id) {
        throw InternalError("tape is not topologically ordered (cycle through node " +
                            std::to_string(in->id) + ")");
      }
    }
    if (r.output == loss.node()) reachable = true;
  }
  if (!reachable && !loss.requires_grad()) {
    throw ContractError("loss is not reachable from any tape record");
  }
  consumed_ = true;
  detail::grad_buffer(*loss.node())[0] += 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->fn();
  }
}

void GradTape::reset() {
  records_.clear();
  consumed_ = false;
}

GradTape* active_tape() noexcept { return t_active_tape; }

TapeScope::TapeScope(GradTape& tape) : previous_(t_active_tape) { t_active_tape = &tape; }
TapeScope::~TapeScope() { t_active_tape = previous_; }

NoGradScope::NoGradScope() : previous_(t_active_tape) { t_active_tape = nullptr; }
NoGradScope::~NoGradScope() { t_active_tape = previous_; }

namespace detail {

bool needs_grad(std::initializer_list<const Tensor*> inputs) {
  if (!t_active_tape) return false;
  for (const auto* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

bool needs_grad(std::span<const Tensor> inputs) {
  if (!t_active_tape) return false;
  for (const auto& t : inputs) {
    if (t.defined() && t.requires_grad()) return true;
  }
  return false;
}

void record(std::initializer_list<const Tensor*> inputs, const Tensor& output,
            GradTape::BackwardFn fn) {
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const auto* t : inputs) {
    if (t && t->defined()) nodes.push_back(t->node());
  }
  output.node()->requires_grad = true;
  t_active_tape->record(std::move(nodes), output.node(), std::move(fn));
}

void record(std::span<const Tensor> inputs, const Tensor& output, GradTape::BackwardFn fn) {
  std::vector<std::shared_ptr<TensorNode>> nodes;
  for (const auto& t : inputs) nodes.push_back(t.node());
  output.node()->requires_grad = true;
  t_active_tape->record(std::move(nodes), output.node(), std::move(fn));
}

std::span<double> grad_buffer(TensorNode& node) {
  if (node.grad.empty()) node.grad.assign(node.data.size(), 0.0);
  return node.grad;
}

}  // namespace detail
}  // namespace ihb
