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

#include "ppgm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>
#include <unordered_set>

namespace ppgm::num {

using detail::TapeNode;

namespace {

thread_local size_t g_degenerate_events = 0;

size_t product(const Shape& s) {
  size_t n = 1;
  for (int d : s) n *= static_cast<size_t>(d);
  return n;
}

void check_shape_positive(const Shape& s, const char* op) {
  if (s.empty() || s.size() > 2)
    throw std::invalid_argument(std::string(op) + ": rank must be 1 or 2, got " + shape_str(s));
  for (int d : s)
    if (d <= 0)
      throw std::invalid_argument(std::string(op) + ": dimensions must be positive, got " + shape_str(s));
}

std::shared_ptr<TapeNode> new_node(Shape shape, const char* op) {
  auto n = std::make_shared<TapeNode>();
  n->shape = std::move(shape);
  n->value.assign(product(n->shape), 0.0);
  n->op = op;
  return n;
}

/// Registers the tape edge when any input carries gradients.
Tensor finish(std::shared_ptr<TapeNode> node,
              std::initializer_list<Tensor> inputs,
              std::function<void(TapeNode&)> backprop) {
  bool rg = false;
  for (const Tensor& t : inputs) rg = rg || t.requires_grad();
  if (rg) {
    node->requires_grad = true;
    for (const Tensor& t : inputs)
      if (t.requires_grad()) node->parents.push_back(t.node());
    node->backprop = std::move(backprop);
  }
  return Tensor::wrap(std::move(node));
}

[[noreturn]] void shape_error(const char* op, const char* what, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": " + what + ", " + shape_str(a) + " vs " + shape_str(b));
}

// C (n x m) += A (n x k) * B (k x m)
void mm_acc(const double* A, const double* B, double* C, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* a = A + static_cast<size_t>(i) * k;
    double* c = C + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = a[p];
      if (av == 0.0) continue;
      const double* b = B + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) c[j] += av * b[j];
    }
  }
}

// C (n x k) += A (n x m) * B^T, with B stored (k x m)
void mm_nt_acc(const double* A, const double* B, double* C, int n, int m, int k) {
  for (int i = 0; i < n; ++i) {
    const double* a = A + static_cast<size_t>(i) * m;
    double* c = C + static_cast<size_t>(i) * k;
    for (int l = 0; l < k; ++l) {
      const double* b = B + static_cast<size_t>(l) * m;
      double acc = 0.0;
      for (int j = 0; j < m; ++j) acc += a[j] * b[j];
      c[l] += acc;
    }
  }
}

// C (k x m) += A^T * B, with A stored (n x k), B stored (n x m)
void mm_tn_acc(const double* A, const double* B, double* C, int n, int k, int m) {
  for (int i = 0; i < n; ++i) {
    const double* a = A + static_cast<size_t>(i) * k;
    const double* b = B + static_cast<size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double av = a[p];
      if (av == 0.0) continue;
      double* c = C + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) c[j] += av * b[j];
    }
  }
}

int row_count(const Tensor& t) { return t.rank() == 1 ? 1 : t.shape()[0]; }

}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

size_t degenerate_event_count() { return g_degenerate_events; }

// ---------------------------------------------------------------------------
// Tensor basics
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  check_shape_positive(shape, "zeros");
  auto n = new_node(std::move(shape), "leaf");
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data, bool requires_grad) {
  check_shape_positive(shape, "from_data");
  if (product(shape) != data.size())
    throw std::invalid_argument("from_data: shape " + shape_str(shape) + " does not match data length " +
                                std::to_string(data.size()));
  auto n = std::make_shared<TapeNode>();
  n->shape = std::move(shape);
  n->value = std::move(data);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::scalar(double v) { return from_data({1, 1}, {v}); }

Tensor Tensor::parameter(Shape shape, std::vector<double> data, std::string name,
                         bool requires_grad) {
  Tensor t = from_data(std::move(shape), std::move(data), requires_grad);
  t.node_->name = std::move(name);
  return t;
}

int Tensor::rows() const { return row_count(*this); }
int Tensor::cols() const { return node_->shape.back(); }

double Tensor::at(int r, int c) const {
  return node_->value[static_cast<size_t>(r) * cols() + c];
}

double Tensor::scalar_value() const {
  if (numel() != 1)
    throw std::invalid_argument("scalar_value: tensor has shape " + shape_str(shape()));
  return node_->value[0];
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2)
    shape_error("matmul", "operands must be rank-2", a.shape(), b.shape());
  if (a.cols() != b.rows())
    shape_error("matmul", "inner dimensions differ", a.shape(), b.shape());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  auto out = new_node({n, m}, "matmul");
  mm_acc(a.data().data(), b.data().data(), out->value.data(), n, k, m);
  auto an = a.node(), bn = b.node();
  return finish(std::move(out), {a, b}, [an, bn, n, k, m](TapeNode& self) {
    if (an->requires_grad) {
      an->ensure_grad();
      mm_nt_acc(self.grad.data(), bn->value.data(), an->grad.data(), n, m, k);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      mm_tn_acc(an->value.data(), self.grad.data(), bn->grad.data(), n, k, m);
    }
  });
}

namespace {

template <class Fwd, class Bwd>
Tensor pointwise_binary(const char* opname, const Tensor& a, const Tensor& b, Fwd fwd, Bwd bwd) {
  if (a.shape() != b.shape()) shape_error(opname, "shape mismatch", a.shape(), b.shape());
  auto out = new_node(a.shape(), opname);
  const auto av = a.data(), bv = b.data();
  for (size_t i = 0; i < av.size(); ++i) out->value[i] = fwd(av[i], bv[i]);
  auto an = a.node(), bn = b.node();
  return finish(std::move(out), {a, b}, [an, bn, bwd](TapeNode& self) {
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double da, db;
      bwd(an->value[i], bn->value[i], self.grad[i], da, db);
      if (an->requires_grad) {
        an->ensure_grad();
        an->grad[i] += da;
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        bn->grad[i] += db;
      }
    }
  });
}

template <class Fwd, class Bwd>
Tensor pointwise_unary(const char* opname, const Tensor& t, Fwd fwd, Bwd bwd) {
  auto out = new_node(t.shape(), opname);
  const auto tv = t.data();
  for (size_t i = 0; i < tv.size(); ++i) out->value[i] = fwd(tv[i]);
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, bwd](TapeNode& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      tn->grad[i] += bwd(tn->value[i], self.value[i]) * self.grad[i];
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return pointwise_binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double, double, double g, double& da, double& db) { da = g; db = g; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return pointwise_binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double, double, double g, double& da, double& db) { da = g; db = -g; });
}

Tensor elementwise_mul(const Tensor& a, const Tensor& b) {
  return pointwise_binary(
      "elementwise_mul", a, b, [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& da, double& db) { da = g * y; db = g * x; });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.rank() != b.rank()) shape_error("concat", "rank mismatch", a.shape(), b.shape());
  if (a.rank() == 2 && a.shape()[0] != b.shape()[0])
    shape_error("concat", "leading dimensions differ", a.shape(), b.shape());
  const int n = row_count(a);
  const int ca = a.cols(), cb = b.cols();
  Shape out_shape = a.rank() == 1 ? Shape{ca + cb} : Shape{n, ca + cb};
  auto out = new_node(std::move(out_shape), "concat");
  const auto av = a.data(), bv = b.data();
  for (int i = 0; i < n; ++i) {
    std::copy_n(av.data() + static_cast<size_t>(i) * ca, ca,
                out->value.data() + static_cast<size_t>(i) * (ca + cb));
    std::copy_n(bv.data() + static_cast<size_t>(i) * cb, cb,
                out->value.data() + static_cast<size_t>(i) * (ca + cb) + ca);
  }
  auto an = a.node(), bn = b.node();
  return finish(std::move(out), {a, b}, [an, bn, n, ca, cb](TapeNode& self) {
    for (int i = 0; i < n; ++i) {
      const double* g = self.grad.data() + static_cast<size_t>(i) * (ca + cb);
      if (an->requires_grad) {
        an->ensure_grad();
        double* da = an->grad.data() + static_cast<size_t>(i) * ca;
        for (int j = 0; j < ca; ++j) da[j] += g[j];
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        double* db = bn->grad.data() + static_cast<size_t>(i) * cb;
        for (int j = 0; j < cb; ++j) db[j] += g[ca + j];
      }
    }
  });
}

Tensor softmax_lastdim(const Tensor& t) {
  const int n = row_count(t), c = t.cols();
  auto out = new_node(t.shape(), "softmax_lastdim");
  const auto tv = t.data();
  for (int i = 0; i < n; ++i) {
    const double* x = tv.data() + static_cast<size_t>(i) * c;
    double* y = out->value.data() + static_cast<size_t>(i) * c;
    double mx = x[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, x[j]);
    double sum = 0.0;
    for (int j = 0; j < c; ++j) {
      y[j] = std::exp(x[j] - mx);
      sum += y[j];
    }
    for (int j = 0; j < c; ++j) y[j] /= sum;
  }
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, n, c](TapeNode& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* y = self.value.data() + static_cast<size_t>(i) * c;
      const double* g = self.grad.data() + static_cast<size_t>(i) * c;
      double dot = 0.0;
      for (int j = 0; j < c; ++j) dot += g[j] * y[j];
      double* dx = tn->grad.data() + static_cast<size_t>(i) * c;
      for (int j = 0; j < c; ++j) dx[j] += y[j] * (g[j] - dot);
    }
  });
}

Tensor sigmoid(const Tensor& t) {
  return pointwise_unary(
      "sigmoid", t,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh_op(const Tensor& t) {
  return pointwise_unary(
      "tanh", t, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor relu(const Tensor& t) {
  return pointwise_unary(
      "relu", t, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& t) {
  return pointwise_unary(
      "softplus", t,
      [](double x) {
        return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
      },
      [](double x, double) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      });
}

Tensor mean_rows(const Tensor& t) {
  if (t.rank() != 2)
    throw std::invalid_argument("mean_rows: operand must be rank-2, got " + shape_str(t.shape()));
  const int n = t.shape()[0], c = t.cols();
  auto out = new_node({1, c}, "mean_rows");
  const auto tv = t.data();
  for (int i = 0; i < n; ++i) {
    const double* x = tv.data() + static_cast<size_t>(i) * c;
    for (int j = 0; j < c; ++j) out->value[j] += x[j];
  }
  for (int j = 0; j < c; ++j) out->value[j] /= n;
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, n, c](TapeNode& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      double* dx = tn->grad.data() + static_cast<size_t>(i) * c;
      for (int j = 0; j < c; ++j) dx[j] += self.grad[j] / n;
    }
  });
}

Tensor l2_normalize(const Tensor& t) {
  if (row_count(t) != 1)
    throw std::invalid_argument("l2_normalize: operand must be a single vector, got " + shape_str(t.shape()));
  const auto tv = t.data();
  double sq = 0.0;
  for (double v : tv) sq += v * v;
  const double norm = std::sqrt(sq);
  auto out = new_node(t.shape(), "l2_normalize");
  const bool degenerate = norm <= 1e-9;
  if (degenerate) {
    ++g_degenerate_events;
    std::cerr << "[ppgm] l2_normalize: near-zero input (norm " << norm
              << "), returning zero vector\n";
  } else {
    for (size_t i = 0; i < tv.size(); ++i) out->value[i] = tv[i] / norm;
  }
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, norm, degenerate](TapeNode& self) {
    if (!tn->requires_grad || degenerate) return;
    tn->ensure_grad();
    const size_t n = self.grad.size();
    double dot = 0.0;
    for (size_t i = 0; i < n; ++i) dot += self.grad[i] * self.value[i];
    for (size_t i = 0; i < n; ++i)
      tn->grad[i] += (self.grad[i] - self.value[i] * dot) / norm;
  });
}

Tensor scale(const Tensor& t, double factor) {
  auto out = new_node(t.shape(), "scale");
  const auto tv = t.data();
  for (size_t i = 0; i < tv.size(); ++i) out->value[i] = tv[i] * factor;
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, factor](TapeNode& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) tn->grad[i] += factor * self.grad[i];
  });
}

Tensor transpose(const Tensor& t) {
  if (t.rank() != 2)
    throw std::invalid_argument("transpose: operand must be rank-2, got " + shape_str(t.shape()));
  const int n = t.shape()[0], c = t.cols();
  auto out = new_node({c, n}, "transpose");
  const auto tv = t.data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j)
      out->value[static_cast<size_t>(j) * n + i] = tv[static_cast<size_t>(i) * c + j];
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, n, c](TapeNode& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j)
        tn->grad[static_cast<size_t>(i) * c + j] += self.grad[static_cast<size_t>(j) * n + i];
  });
}

Tensor slice_cols(const Tensor& t, int start, int len) {
  if (t.rank() != 2)
    throw std::invalid_argument("slice_cols: operand must be rank-2, got " + shape_str(t.shape()));
  if (start < 0 || len <= 0 || start + len > t.cols())
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of " + shape_str(t.shape()));
  const int n = t.shape()[0], c = t.cols();
  auto out = new_node({n, len}, "slice_cols");
  const auto tv = t.data();
  for (int i = 0; i < n; ++i)
    std::copy_n(tv.data() + static_cast<size_t>(i) * c + start, len,
                out->value.data() + static_cast<size_t>(i) * len);
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, n, c, start, len](TapeNode& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* g = self.grad.data() + static_cast<size_t>(i) * len;
      double* dx = tn->grad.data() + static_cast<size_t>(i) * c + start;
      for (int j = 0; j < len; ++j) dx[j] += g[j];
    }
  });
}

Tensor add_rowvec(const Tensor& mat, const Tensor& vec) {
  if (mat.rank() != 2 || row_count(vec) != 1 || vec.cols() != mat.cols())
    shape_error("add_rowvec", "expected (n x k) and (1 x k)", mat.shape(), vec.shape());
  const int n = mat.shape()[0], c = mat.cols();
  auto out = new_node(mat.shape(), "add_rowvec");
  const auto mv = mat.data(), vv = vec.data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j)
      out->value[static_cast<size_t>(i) * c + j] = mv[static_cast<size_t>(i) * c + j] + vv[j];
  auto mn = mat.node(), vn = vec.node();
  return finish(std::move(out), {mat, vec}, [mn, vn, n, c](TapeNode& self) {
    if (mn->requires_grad) {
      mn->ensure_grad();
      for (size_t i = 0; i < self.grad.size(); ++i) mn->grad[i] += self.grad[i];
    }
    if (vn->requires_grad) {
      vn->ensure_grad();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) vn->grad[j] += self.grad[static_cast<size_t>(i) * c + j];
    }
  });
}

Tensor mean_all(const Tensor& t) {
  auto out = new_node({1, 1}, "mean_all");
  const auto tv = t.data();
  double sum = 0.0;
  for (double v : tv) sum += v;
  const double inv = 1.0 / static_cast<double>(tv.size());
  out->value[0] = sum * inv;
  auto tn = t.node();
  return finish(std::move(out), {t}, [tn, inv](TapeNode& self) {
    if (!tn->requires_grad) return;
    tn->ensure_grad();
    const double g = self.grad[0] * inv;
    for (double& d : tn->grad) d += g;
  });
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::matmul: return "matmul";
    case OpKind::add: return "add";
    case OpKind::sub: return "sub";
    case OpKind::elementwise_mul: return "elementwise_mul";
    case OpKind::concat: return "concat";
    case OpKind::softmax_lastdim: return "softmax_lastdim";
    case OpKind::sigmoid: return "sigmoid";
    case OpKind::tanh: return "tanh";
    case OpKind::relu: return "relu";
    case OpKind::mean_rows: return "mean_rows";
    case OpKind::l2_normalize: return "l2_normalize";
    case OpKind::scale: return "scale";
  }
  return "?";
}

bool op_kind_is_binary(OpKind k) {
  switch (k) {
    case OpKind::matmul:
    case OpKind::add:
    case OpKind::sub:
    case OpKind::elementwise_mul:
    case OpKind::concat:
      return true;
    default:
      return false;
  }
}

Tensor tensor_op(OpKind kind, const std::vector<Tensor>& inputs, double scale_factor) {
  const size_t want = op_kind_is_binary(kind) ? 2 : 1;
  if (inputs.size() != want)
    throw std::invalid_argument(std::string(op_kind_name(kind)) + ": expected " +
                                std::to_string(want) + " inputs, got " + std::to_string(inputs.size()));
  switch (kind) {
    case OpKind::matmul: return matmul(inputs[0], inputs[1]);
    case OpKind::add: return add(inputs[0], inputs[1]);
    case OpKind::sub: return sub(inputs[0], inputs[1]);
    case OpKind::elementwise_mul: return elementwise_mul(inputs[0], inputs[1]);
    case OpKind::concat: return concat(inputs[0], inputs[1]);
    case OpKind::softmax_lastdim: return softmax_lastdim(inputs[0]);
    case OpKind::sigmoid: return sigmoid(inputs[0]);
    case OpKind::tanh: return tanh_op(inputs[0]);
    case OpKind::relu: return relu(inputs[0]);
    case OpKind::mean_rows: return mean_rows(inputs[0]);
    case OpKind::l2_normalize: return l2_normalize(inputs[0]);
    case OpKind::scale: return scale(inputs[0], scale_factor);
  }
  throw std::invalid_argument("tensor_op: unknown kind");
}

// ---------------------------------------------------------------------------
// Reverse sweep
// ---------------------------------------------------------------------------

GradMap backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1)
    throw std::invalid_argument("backward: loss must be a scalar tensor" +
                                (loss.defined() ? ", got shape " + shape_str(loss.shape()) : std::string()));
  GradMap out;
  TapeNode* root = loss.node().get();
  if (!root->requires_grad) return out;

  // Reverse post-order over the consumer->input DAG gives a valid order for
  // the sweep (every node is processed after all of its consumers).
  std::vector<TapeNode*> order;
  std::unordered_set<TapeNode*> visited;
  struct Frame {
    TapeNode* node;
    size_t next_parent;
  };
  std::vector<Frame> stack;
  stack.push_back({root, 0});
  visited.insert(root);
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_parent < f.node->parents.size()) {
      TapeNode* p = f.node->parents[f.next_parent++].get();
      if (visited.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TapeNode* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop(*n);
    }
  }
  for (TapeNode* n : order) {
    if (n->requires_grad && !n->name.empty()) {
      n->ensure_grad();
      out.emplace(n->name, Tensor::from_data(n->shape, n->grad));
    }
  }
  // Grad buffers are scratch space owned by the tape; clear them so a later
  // sweep over the same parameters starts from zero.
  for (TapeNode* n : order) n->grad.clear();
  return out;
}

}  // namespace ppgm::num
