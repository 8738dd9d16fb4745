#pragma once

// Independent double-precision reference implementations used as oracles.
// Everything here is written as plain nested loops straight from the math;
// no code is shared with the library kernels under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace refops {

struct RefTensor {
  std::vector<int> dims;
  std::vector<double> v;

  RefTensor() = default;
  RefTensor(std::vector<int> d) : dims(std::move(d)) {
    int64_t n = 1;
    for (int e : dims) n *= e;
    v.assign(static_cast<size_t>(n), 0.0);
  }
  int64_t numel() const { return static_cast<int64_t>(v.size()); }
};

inline int conv_out_extent(int in, int pad, int k, int stride) {
  return (in + 2 * pad - k) / stride + 1;
}

// Y[b,c',d,h,w] = sum_c sum_u sum_v sum_w' K[c',c,u,v,w'] * X[b,c,d*sd+u-pd,...] + bias[c']
inline RefTensor conv3d_ref(const RefTensor& x, const RefTensor& k,
                            const std::vector<double>& bias,
                            int pd, int ph, int pw,
                            int sd, int sh, int sw) {
  const int B = x.dims[0], C = x.dims[1], D = x.dims[2], H = x.dims[3], W = x.dims[4];
  const int Co = k.dims[0], kd = k.dims[2], kh = k.dims[3], kw = k.dims[4];
  const int Do = conv_out_extent(D, pd, kd, sd);
  const int Ho = conv_out_extent(H, ph, kh, sh);
  const int Wo = conv_out_extent(W, pw, kw, sw);
  RefTensor y({B, Co, Do, Ho, Wo});
  for (int b = 0; b < B; ++b)
    for (int co = 0; co < Co; ++co)
      for (int d = 0; d < Do; ++d)
        for (int h = 0; h < Ho; ++h)
          for (int w = 0; w < Wo; ++w) {
            double acc = bias.empty() ? 0.0 : bias[co];
            for (int c = 0; c < C; ++c)
              for (int u = 0; u < kd; ++u)
                for (int vv = 0; vv < kh; ++vv)
                  for (int ww = 0; ww < kw; ++ww) {
                    const int di = d * sd + u - pd;
                    const int hi = h * sh + vv - ph;
                    const int wi = w * sw + ww - pw;
                    if (di < 0 || di >= D || hi < 0 || hi >= H || wi < 0 || wi >= W)
                      continue;
                    const double kv =
                        k.v[(((static_cast<size_t>(co) * C + c) * kd + u) * kh + vv) * kw + ww];
                    const double xv =
                        x.v[(((static_cast<size_t>(b) * C + c) * D + di) * H + hi) * W + wi];
                    acc += kv * xv;
                  }
            y.v[(((static_cast<size_t>(b) * Co + co) * Do + d) * Ho + h) * Wo + w] = acc;
          }
  return y;
}

inline RefTensor relu_ref(const RefTensor& x) {
  RefTensor y(x.dims);
  for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = x.v[i] > 0.0 ? x.v[i] : 0.0;
  return y;
}

inline RefTensor maxpool3d_ref(const RefTensor& x, int wd, int wh, int ww,
                               int sd, int sh, int sw) {
  const int B = x.dims[0], C = x.dims[1], D = x.dims[2], H = x.dims[3], W = x.dims[4];
  const int Do = (D - wd) / sd + 1, Ho = (H - wh) / sh + 1, Wo = (W - ww) / sw + 1;
  RefTensor y({B, C, Do, Ho, Wo});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c)
      for (int d = 0; d < Do; ++d)
        for (int h = 0; h < Ho; ++h)
          for (int w = 0; w < Wo; ++w) {
            double best = -1e300;
            for (int u = 0; u < wd; ++u)
              for (int vv = 0; vv < wh; ++vv)
                for (int t = 0; t < ww; ++t) {
                  const double xv = x.v[(((static_cast<size_t>(b) * C + c) * D + d * sd + u) * H +
                                         h * sh + vv) * W + w * sw + t];
                  best = std::max(best, xv);
                }
            y.v[(((static_cast<size_t>(b) * C + c) * Do + d) * Ho + h) * Wo + w] = best;
          }
  return y;
}

// g[b,c] = mean over (D,H,W) of X[b,c,...]
inline RefTensor gap3d_ref(const RefTensor& x) {
  const int B = x.dims[0], C = x.dims[1], D = x.dims[2], H = x.dims[3], W = x.dims[4];
  RefTensor y({B, C});
  const int64_t vol = static_cast<int64_t>(D) * H * W;
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int64_t i = 0; i < vol; ++i)
        acc += x.v[(static_cast<size_t>(b) * C + c) * vol + i];
      y.v[static_cast<size_t>(b) * C + c] = acc / static_cast<double>(vol);
    }
  return y;
}

inline RefTensor dense_ref(const RefTensor& x, const RefTensor& w,
                           const std::vector<double>& bias) {
  const int B = x.dims[0], C = x.dims[1], M = w.dims[1];
  RefTensor y({B, M});
  for (int b = 0; b < B; ++b)
    for (int m = 0; m < M; ++m) {
      double acc = bias.empty() ? 0.0 : bias[m];
      for (int c = 0; c < C; ++c)
        acc += x.v[static_cast<size_t>(b) * C + c] * w.v[static_cast<size_t>(c) * M + m];
      y.v[static_cast<size_t>(b) * M + m] = acc;
    }
  return y;
}

inline RefTensor sigmoid_ref(const RefTensor& x) {
  RefTensor y(x.dims);
  for (size_t i = 0; i < x.v.size(); ++i) y.v[i] = 1.0 / (1.0 + std::exp(-x.v[i]));
  return y;
}

// -mean(y*log p + (1-y)*log(1-p)), p clamped into [1e-7, 1-1e-7].
inline double bce_ref(const std::vector<double>& p, const std::vector<double>& y) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pc = std::clamp(p[i], 1e-7, 1.0 - 1e-7);
    acc += y[i] * std::log(pc) + (1.0 - y[i]) * std::log(1.0 - pc);
  }
  return -acc / static_cast<double>(p.size());
}

}  // namespace refops
