#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hiveguard/autodiff.hpp"
#include "hiveguard/label.hpp"
#include "hiveguard/ops.hpp"
#include "hiveguard/rng.hpp"
#include "hiveguard/tensor.hpp"

// The classifier: three blocks of conv3d -> ReLU -> max pool, then global
// average pooling and a single-logit sigmoid head.

namespace hiveguard {

struct ArchDescriptor {
  int in_channels = 1;
  int depth = 8;
  int height = 64;
  int width = 64;
  std::array<int, 3> channels{16, 32, 64};
  int kernel = 3;  // cubic, stride 1, same padding
  int pool = 2;    // cubic window, stride equal to window

  void validate() const {
    if (kernel < 1 || kernel % 2 == 0)
      throw ConfigError("architecture: kernel must be odd and positive");
    if (pool < 1) throw ConfigError("architecture: pool must be positive");
    const int shrink = pool * pool * pool;
    if (depth % shrink || height % shrink || width % shrink)
      throw ConfigError("architecture: extents must survive three pool stages (divisible by " +
                        std::to_string(shrink) + ")");
    for (int c : channels)
      if (c < 1) throw ConfigError("architecture: channel widths must be positive");
  }

  Shape input_shape(int batch) const { return Shape{batch, in_channels, depth, height, width}; }

  /// Feature map shape after `blocks` conv blocks (0..3).
  Shape feature_shape(int blocks, int batch) const {
    int c = in_channels, d = depth, h = height, w = width;
    for (int i = 0; i < blocks; ++i) {
      c = channels[static_cast<size_t>(i)];
      d /= pool; h /= pool; w /= pool;
    }
    return Shape{batch, c, d, h, w};
  }

  int64_t param_count() const {
    const int k3 = kernel * kernel * kernel;
    int64_t total = 0;
    int cin = in_channels;
    for (int c : channels) {
      total += static_cast<int64_t>(c) * cin * k3 + c;
      cin = c;
    }
    total += channels[2] + 1;  // head weights + bias
    return total;
  }

  bool operator==(const ArchDescriptor&) const = default;
};

struct Kernel3D {
  Tensor weights;  // CoxCixKdxKhxKw
  Tensor bias;     // Co
};

struct ModelParams {
  ArchDescriptor arch;
  std::array<Kernel3D, 3> blocks;
  Tensor head_w;  // C3x1
  Tensor head_b;  // 1

  /// Parameter tensors in checkpoint/optimizer order.
  std::vector<Tensor*> tensors() {
    return {&blocks[0].weights, &blocks[0].bias, &blocks[1].weights, &blocks[1].bias,
            &blocks[2].weights, &blocks[2].bias, &head_w, &head_b};
  }
  std::vector<const Tensor*> tensors() const {
    return {&blocks[0].weights, &blocks[0].bias, &blocks[1].weights, &blocks[1].bias,
            &blocks[2].weights, &blocks[2].bias, &head_w, &head_b};
  }
  static const std::vector<std::string>& tensor_names() {
    static const std::vector<std::string> names = {
        "block1.weight", "block1.bias", "block2.weight", "block2.bias",
        "block3.weight", "block3.bias", "head.weight",   "head.bias"};
    return names;
  }
};

/// Kaiming-uniform fan-in initialization; all biases start at zero.
inline ModelParams init_model(const ArchDescriptor& arch, uint64_t seed) {
  arch.validate();
  ModelParams m;
  m.arch = arch;
  const int k3 = arch.kernel * arch.kernel * arch.kernel;
  int cin = arch.in_channels;
  for (int i = 0; i < 3; ++i) {
    const int co = arch.channels[static_cast<size_t>(i)];
    Tensor w(Shape{co, cin, arch.kernel, arch.kernel, arch.kernel});
    const double bound = std::sqrt(6.0 / (static_cast<double>(cin) * k3));
    Rng rng(mix_seed(seed, 100 + static_cast<uint64_t>(i)));
    for (float& v : w.data) v = static_cast<float>(rng.uniform(-bound, bound));
    m.blocks[static_cast<size_t>(i)].weights = std::move(w);
    m.blocks[static_cast<size_t>(i)].bias = Tensor(Shape{co});
    cin = co;
  }
  m.head_w = Tensor(Shape{arch.channels[2], 1});
  const double bound = std::sqrt(6.0 / arch.channels[2]);
  Rng rng(mix_seed(seed, 200));
  for (float& v : m.head_w.data) v = static_cast<float>(rng.uniform(-bound, bound));
  m.head_b = Tensor(Shape{1});
  return m;
}

namespace detail {
inline void check_model_input(const ArchDescriptor& a, const Shape& x) {
  if (x.rank != 5 || x[1] != a.in_channels || x[2] != a.depth || x[3] != a.height ||
      x[4] != a.width)
    throw ShapeError("model: input " + x.str() + " does not match architecture input " +
                     a.input_shape(x.rank == 5 ? x[0] : 1).str());
}
}  // namespace detail

/// Inference forward pass: probabilities of the positive class, shape Bx1.
inline Tensor forward_probs(const ModelParams& m, const Tensor& x, int workers = 1) {
  detail::check_model_input(m.arch, x.shape);
  const Conv3dSpec conv = Conv3dSpec::same(m.arch.kernel);
  Pool3dSpec pool;
  pool.win_d = pool.win_h = pool.win_w = m.arch.pool;
  pool.stride_d = pool.stride_h = pool.stride_w = m.arch.pool;
  Tensor h = x;
  for (const Kernel3D& blk : m.blocks) {
    h = conv3d_fwd(h, blk.weights, blk.bias, conv, workers);
    h = relu_fwd(h);
    h = maxpool3d_fwd(h, pool);
  }
  h = gap3d_fwd(h);
  h = dense_fwd(h, m.head_w, m.head_b);
  return sigmoid_fwd(h);
}

/// Parameters bound onto a tape for one differentiable forward pass.
struct ModelVars {
  std::array<std::pair<Var, Var>, 3> blocks;  // weights, bias
  Var head_w, head_b;
};

inline ModelVars bind_params(Tape& tape, const ModelParams& m, bool requires_grad) {
  ModelVars v;
  for (size_t i = 0; i < 3; ++i)
    v.blocks[i] = {tape.leaf(m.blocks[i].weights, requires_grad),
                   tape.leaf(m.blocks[i].bias, requires_grad)};
  v.head_w = tape.leaf(m.head_w, requires_grad);
  v.head_b = tape.leaf(m.head_b, requires_grad);
  return v;
}

inline Var forward_probs(const ArchDescriptor& arch, const ModelVars& mv, Var x,
                         int workers = 1) {
  detail::check_model_input(arch, x.shape());
  const Conv3dSpec conv = Conv3dSpec::same(arch.kernel);
  Pool3dSpec pool;
  pool.win_d = pool.win_h = pool.win_w = arch.pool;
  pool.stride_d = pool.stride_h = pool.stride_w = arch.pool;
  Var h = x;
  for (const auto& [w, b] : mv.blocks) {
    h = conv3d(h, w, b, conv, workers);
    h = relu(h);
    h = maxpool3d(h, pool);
  }
  h = gap3d(h);
  h = dense(h, mv.head_w, mv.head_b);
  return sigmoid(h);
}

struct Prediction {
  Label label;
  double confidence;   // max(p, 1-p), in [0.5, 1)
  double probability;  // p(DDoS)
};

/// Classify one CxDxHxW sample; p >= 0.5 resolves to DDoS.
inline Prediction predict(const ModelParams& m, const Tensor& x, int workers = 1) {
  if (x.shape.rank != 4)
    throw ShapeError("predict: expected a CxDxHxW sample, got " + x.shape.str());
  Tensor batch(Shape{1, x.shape[0], x.shape[1], x.shape[2], x.shape[3]});
  batch.data = x.data;
  const Tensor p = forward_probs(m, batch, workers);
  const double prob = p.data[0];
  Prediction out;
  out.probability = prob;
  out.label = prob >= 0.5 ? Label::DDoS : Label::Normal;
  out.confidence = std::max(prob, 1.0 - prob);
  return out;
}

}  // namespace hiveguard
