#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <utility>
#include <vector>

#include "hiveguard/errors.hpp"
#include "hiveguard/ops.hpp"
#include "hiveguard/tensor.hpp"

// Reverse-mode differentiation over whole-tensor operations. A Tape records
// nodes in execution order; backward() walks them in exact reverse order.
// Adjoints live in per-pass buffers and are added into each participating
// tensor's grad at the end, so calling backward twice accumulates.

namespace hiveguard {

class Tape;

struct Node {
  Tensor value;
  int id = -1;
  bool requires_grad = false;  // true if any input path requires gradients
  std::function<void(Tape&, const Node&)> backward;
};

/// Cheap handle to a tape node.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, Node* node) : tape_(tape), node_(node) {}

  bool valid() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  bool requires_grad() const { return node_->requires_grad; }

  /// Accumulated gradient; empty until a backward pass has reached it.
  const std::vector<float>& grad() const { return node_->value.grad; }

  Tape* tape() const { return tape_; }
  Node* node() const { return node_; }

 private:
  Tape* tape_ = nullptr;
  Node* node_ = nullptr;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Record an input tensor. Gradients are produced for it only when
  /// requires_grad is set.
  Var leaf(Tensor t, bool requires_grad = false) {
    t.requires_grad = requires_grad;
    Node& n = emplace(std::move(t), requires_grad);
    return Var(this, &n);
  }

  Node& emplace(Tensor value, bool requires_grad) {
    value.requires_grad = requires_grad;
    nodes_.emplace_back();
    Node& n = nodes_.back();
    n.value = std::move(value);
    n.id = static_cast<int>(nodes_.size()) - 1;
    n.requires_grad = requires_grad;
    return n;
  }

  /// Propagate d(loss)/d(node) to every node reachable from `loss` and add
  /// the results into each tensor's grad.
  void backward(Var loss) {
    if (!loss.valid() || loss.tape() != this)
      throw TapeError("backward: loss does not belong to this tape");
    if (loss.node()->value.numel() != 1)
      throw TapeError("backward: loss must be a scalar");
    if (!loss.node()->requires_grad)
      throw TapeError("backward: loss is detached from every gradient input");

    adjoints_.assign(nodes_.size(), {});
    adjoint_accum(loss.node())[0] = 1.0f;
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
      Node& n = *it;
      if (!n.requires_grad || !n.backward) continue;
      if (adjoints_[static_cast<size_t>(n.id)].empty()) continue;  // not on the loss path
      n.backward(*this, n);
    }
    for (Node& n : nodes_) {
      auto& adj = adjoints_[static_cast<size_t>(n.id)];
      if (adj.empty()) continue;
      n.value.ensure_grad();
      for (size_t i = 0; i < adj.size(); ++i) n.value.grad[i] += adj[i];
    }
    adjoints_.clear();
  }

  /// Adjoint buffer of `n` during a backward pass, allocated on first use.
  float* adjoint_accum(Node* n) {
    auto& adj = adjoints_[static_cast<size_t>(n->id)];
    if (adj.empty()) adj.assign(n->value.data.size(), 0.0f);
    return adj.data();
  }

  const float* adjoint_of(const Node& n) const {
    return adjoints_[static_cast<size_t>(n.id)].data();
  }

  size_t size() const { return nodes_.size(); }

 private:
  std::deque<Node> nodes_;  // stable addresses
  std::vector<std::vector<float>> adjoints_;
};

// ---- taped operations ----

inline Var conv3d(Var x, Var w, Var b, const Conv3dSpec& spec, int workers = 1) {
  Tape& tp = *x.tape();
  Tensor y = conv3d_fwd(x.value(), w.value(), b.value(), spec, workers);
  const bool rg = x.requires_grad() || w.requires_grad() || b.requires_grad();
  Node& n = tp.emplace(std::move(y), rg);
  if (rg) {
    Node* xn = x.node(); Node* wn = w.node(); Node* bn = b.node();
    n.backward = [xn, wn, bn, spec, workers](Tape& t, const Node& self) {
      float* dx = xn->requires_grad ? t.adjoint_accum(xn) : nullptr;
      float* dw = wn->requires_grad ? t.adjoint_accum(wn) : nullptr;
      float* db = bn->requires_grad ? t.adjoint_accum(bn) : nullptr;
      conv3d_bwd(xn->value, wn->value, spec, t.adjoint_of(self), dx, dw, db, workers);
    };
  }
  return Var(&tp, &n);
}

inline Var relu(Var x) {
  Tape& tp = *x.tape();
  Node& n = tp.emplace(relu_fwd(x.value()), x.requires_grad());
  if (x.requires_grad()) {
    Node* xn = x.node();
    n.backward = [xn](Tape& t, const Node& self) {
      relu_bwd(xn->value, t.adjoint_of(self), t.adjoint_accum(xn));
    };
  }
  return Var(&tp, &n);
}

inline Var maxpool3d(Var x, const Pool3dSpec& spec) {
  Tape& tp = *x.tape();
  std::vector<int64_t> argmax;
  Tensor y = maxpool3d_fwd(x.value(), spec, x.requires_grad() ? &argmax : nullptr);
  Node& n = tp.emplace(std::move(y), x.requires_grad());
  if (x.requires_grad()) {
    Node* xn = x.node();
    n.backward = [xn, argmax = std::move(argmax)](Tape& t, const Node& self) {
      maxpool3d_bwd(argmax, t.adjoint_of(self), t.adjoint_accum(xn));
    };
  }
  return Var(&tp, &n);
}

inline Var gap3d(Var x) {
  Tape& tp = *x.tape();
  Node& n = tp.emplace(gap3d_fwd(x.value()), x.requires_grad());
  if (x.requires_grad()) {
    Node* xn = x.node();
    const Shape xs = x.shape();
    n.backward = [xn, xs](Tape& t, const Node& self) {
      gap3d_bwd(xs, t.adjoint_of(self), t.adjoint_accum(xn));
    };
  }
  return Var(&tp, &n);
}

inline Var dense(Var x, Var w, Var b) {
  Tape& tp = *x.tape();
  Tensor y = dense_fwd(x.value(), w.value(), b.value());
  const bool rg = x.requires_grad() || w.requires_grad() || b.requires_grad();
  Node& n = tp.emplace(std::move(y), rg);
  if (rg) {
    Node* xn = x.node(); Node* wn = w.node(); Node* bn = b.node();
    n.backward = [xn, wn, bn](Tape& t, const Node& self) {
      float* dx = xn->requires_grad ? t.adjoint_accum(xn) : nullptr;
      float* dw = wn->requires_grad ? t.adjoint_accum(wn) : nullptr;
      float* db = bn->requires_grad ? t.adjoint_accum(bn) : nullptr;
      dense_bwd(xn->value, wn->value, t.adjoint_of(self), dx, dw, db);
    };
  }
  return Var(&tp, &n);
}

inline Var sigmoid(Var x) {
  Tape& tp = *x.tape();
  Node& n = tp.emplace(sigmoid_fwd(x.value()), x.requires_grad());
  if (x.requires_grad()) {
    Node* xn = x.node();
    n.backward = [xn, yn = &n](Tape& t, const Node& self) {
      sigmoid_bwd(yn->value, t.adjoint_of(self), t.adjoint_accum(xn));
    };
  }
  return Var(&tp, &n);
}

inline Var bce_loss(Var p, std::vector<float> labels) {
  Tape& tp = *p.tape();
  Tensor l = bce_fwd(p.value(), labels);
  Node& n = tp.emplace(std::move(l), p.requires_grad());
  if (p.requires_grad()) {
    Node* pn = p.node();
    n.backward = [pn, labels = std::move(labels)](Tape& t, const Node& self) {
      bce_bwd(pn->value, labels, t.adjoint_of(self), t.adjoint_accum(pn));
    };
  }
  return Var(&tp, &n);
}

inline Var add(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "add");
  Tape& tp = *a.tape();
  Tensor y(a.shape());
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = a.value().data[i] + b.value().data[i];
  Node& n = tp.emplace(std::move(y), a.requires_grad() || b.requires_grad());
  if (n.requires_grad) {
    Node* an = a.node(); Node* bn = b.node();
    n.backward = [an, bn](Tape& t, const Node& self) {
      const float* dy = t.adjoint_of(self);
      if (an->requires_grad) {
        float* da = t.adjoint_accum(an);
        for (size_t i = 0; i < an->value.data.size(); ++i) da[i] += dy[i];
      }
      if (bn->requires_grad) {
        float* db = t.adjoint_accum(bn);
        for (size_t i = 0; i < bn->value.data.size(); ++i) db[i] += dy[i];
      }
    };
  }
  return Var(&tp, &n);
}

inline Var sub(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "sub");
  Tape& tp = *a.tape();
  Tensor y(a.shape());
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = a.value().data[i] - b.value().data[i];
  Node& n = tp.emplace(std::move(y), a.requires_grad() || b.requires_grad());
  if (n.requires_grad) {
    Node* an = a.node(); Node* bn = b.node();
    n.backward = [an, bn](Tape& t, const Node& self) {
      const float* dy = t.adjoint_of(self);
      if (an->requires_grad) {
        float* da = t.adjoint_accum(an);
        for (size_t i = 0; i < an->value.data.size(); ++i) da[i] += dy[i];
      }
      if (bn->requires_grad) {
        float* db = t.adjoint_accum(bn);
        for (size_t i = 0; i < bn->value.data.size(); ++i) db[i] -= dy[i];
      }
    };
  }
  return Var(&tp, &n);
}

inline Var mul(Var a, Var b) {
  check_same_shape(a.value(), b.value(), "mul");
  Tape& tp = *a.tape();
  Tensor y(a.shape());
  for (size_t i = 0; i < y.data.size(); ++i) y.data[i] = a.value().data[i] * b.value().data[i];
  Node& n = tp.emplace(std::move(y), a.requires_grad() || b.requires_grad());
  if (n.requires_grad) {
    Node* an = a.node(); Node* bn = b.node();
    n.backward = [an, bn](Tape& t, const Node& self) {
      const float* dy = t.adjoint_of(self);
      if (an->requires_grad) {
        float* da = t.adjoint_accum(an);
        for (size_t i = 0; i < an->value.data.size(); ++i) da[i] += dy[i] * bn->value.data[i];
      }
      if (bn->requires_grad) {
        float* db = t.adjoint_accum(bn);
        for (size_t i = 0; i < bn->value.data.size(); ++i) db[i] += dy[i] * an->value.data[i];
      }
    };
  }
  return Var(&tp, &n);
}

inline Var sum(Var x) {
  Tape& tp = *x.tape();
  double acc = 0.0;
  for (float v : x.value().data) acc += v;
  Tensor y(Shape{1});
  y.data[0] = static_cast<float>(acc);
  Node& n = tp.emplace(std::move(y), x.requires_grad());
  if (x.requires_grad()) {
    Node* xn = x.node();
    n.backward = [xn](Tape& t, const Node& self) {
      const float g = t.adjoint_of(self)[0];
      float* dx = t.adjoint_accum(xn);
      for (size_t i = 0; i < xn->value.data.size(); ++i) dx[i] += g;
    };
  }
  return Var(&tp, &n);
}

}  // namespace hiveguard
