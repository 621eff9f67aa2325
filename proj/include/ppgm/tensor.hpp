// Copyright 2026 The PPGM Workbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ppgm::num {

/// Row-major dense shape; rank 1 or 2 throughout this project.
using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

namespace detail {

struct TapeNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // sized lazily during backward
  bool requires_grad = false;
  std::string name;  // non-empty only for named parameters
  std::vector<std::shared_ptr<TapeNode>> parents;
  std::function<void(TapeNode&)> backprop;  // accumulates into parents' grads
  const char* op = "leaf";

  size_t numel() const { return value.size(); }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

/// Dense 64-bit real tensor participating in a reverse-mode tape.
/// Copies share the underlying node (shallow, reference-counted); a tape is
/// confined to the thread that built it.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);
  /// Named parameter; the name is the GradMap key. Frozen (requires_grad
  /// false) named tensors are used for inference-only parameter sets.
  static Tensor parameter(Shape shape, std::vector<double> data,
                          std::string name, bool requires_grad = true);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int rank() const { return static_cast<int>(node_->shape.size()); }
  /// Number of rows; a rank-1 tensor counts as a single row.
  int rows() const;
  /// Size of the last dimension.
  int cols() const;
  size_t numel() const { return node_->numel(); }

  std::span<const double> data() const { return node_->value; }
  /// In-place mutation; only valid between forward/backward passes
  /// (initialization and optimizer updates).
  std::span<double> mutable_data() { return node_->value; }

  double at(int r, int c) const;
  double scalar_value() const;

  bool requires_grad() const { return node_->requires_grad; }
  const std::string& name() const { return node_->name; }

  std::shared_ptr<detail::TapeNode> node() const { return node_; }
  static Tensor wrap(std::shared_ptr<detail::TapeNode> n) { return Tensor(std::move(n)); }

 private:
  explicit Tensor(std::shared_ptr<detail::TapeNode> n) : node_(std::move(n)) {}
  std::shared_ptr<detail::TapeNode> node_;
};

/// Parameter identifier -> gradient of identical shape.
using GradMap = std::map<std::string, Tensor>;
/// Parameter identifier -> named parameter tensor.
using ParamStore = std::map<std::string, Tensor>;

// ---------------------------------------------------------------------------
// Forward primitives. Each result joins the tape when any input requires
// gradients; shape mismatches throw std::invalid_argument naming the
// operation and both shapes.
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor elementwise_mul(const Tensor& a, const Tensor& b);
/// Concatenation along the last dimension.
Tensor concat(const Tensor& a, const Tensor& b);
Tensor softmax_lastdim(const Tensor& t);
Tensor sigmoid(const Tensor& t);
Tensor tanh_op(const Tensor& t);
Tensor relu(const Tensor& t);
/// Row mean of a rank-2 tensor; result is 1 x cols.
Tensor mean_rows(const Tensor& t);
/// Vector treated flat; inputs with norm <= 1e-9 map to the zero vector
/// (logged as degenerate).
Tensor l2_normalize(const Tensor& t);
Tensor scale(const Tensor& t, double factor);

// Supporting primitives (same tape discipline, gradient-checked like the
// rest).
Tensor transpose(const Tensor& t);
Tensor slice_cols(const Tensor& t, int start, int len);
/// mat (n x k) + row vector (1 x k or k), broadcast over rows.
Tensor add_rowvec(const Tensor& mat, const Tensor& vec);
/// Mean over all entries; result is a 1x1 scalar.
Tensor mean_all(const Tensor& t);
/// log(1 + exp(x)), numerically stable.
Tensor softplus(const Tensor& t);

/// The primitive set named by the workbench contract, as a dispatchable
/// enum (property tests iterate over it).
enum class OpKind {
  matmul,
  add,
  sub,
  elementwise_mul,
  concat,
  softmax_lastdim,
  sigmoid,
  tanh,
  relu,
  mean_rows,
  l2_normalize,
  scale,
};

const char* op_kind_name(OpKind k);
bool op_kind_is_binary(OpKind k);
Tensor tensor_op(OpKind kind, const std::vector<Tensor>& inputs,
                 double scale_factor = 1.0);

/// Reverse-mode sweep from a scalar loss. Returns the gradient of every
/// reachable named parameter; parameters not on the tape are absent.
GradMap backward(const Tensor& loss);

/// Count of degenerate numeric events (near-zero l2_normalize inputs) seen
/// by this thread, for log inspection in tests.
size_t degenerate_event_count();

}  // namespace ppgm::num
