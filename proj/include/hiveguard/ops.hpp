#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <vector>

#include "hiveguard/errors.hpp"
#include "hiveguard/parallel.hpp"
#include "hiveguard/tensor.hpp"

// Dense kernels shared by the taped and inference paths. Convolution runs
// as patch-matrix (im2col) tiles against a register-blocked kernel matrix;
// reductions accumulate in double and round to f32 once at the end, with a
// fixed summation order so results do not depend on the worker count.

namespace hiveguard {

struct Conv3dSpec {
  int pad_d = 0, pad_h = 0, pad_w = 0;
  int stride_d = 1, stride_h = 1, stride_w = 1;

  /// Stride-1 "same" geometry for an odd cubic kernel.
  static Conv3dSpec same(int kernel) {
    Conv3dSpec s;
    s.pad_d = s.pad_h = s.pad_w = kernel / 2;
    return s;
  }
};

struct Pool3dSpec {
  int win_d = 2, win_h = 2, win_w = 2;
  int stride_d = 2, stride_h = 2, stride_w = 2;
};

namespace detail {

#if defined(__GLIBC__)
#include <malloc.h>
#endif

/// Large activation tensors churn through malloc; keep big blocks on the
/// freelist instead of returning them to the kernel every time.
inline void tune_allocator_once() {
#if defined(__GLIBC__)
  static const bool done = [] {
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
    return true;
  }();
  (void)done;
#endif
}

constexpr int kConvTile = 128;  // positions per patch-matrix tile

struct ConvDims {
  int B, C, D, H, W;       // input
  int Co, kd, kh, kw;      // kernel
  int Do, Ho, Wo;          // output
  int64_t npos;            // Do*Ho*Wo
  int KK;                  // C*kd*kh*kw
};

inline ConvDims conv_dims(const Shape& xs, const Shape& ws, const Conv3dSpec& s) {
  if (xs.rank != 5) throw ShapeError("conv3d: input must be rank 5 (BxCxDxHxW)");
  if (ws.rank != 5) throw ShapeError("conv3d: kernel must be rank 5 (CoxCixKdxKhxKw)");
  if (xs[1] != ws[1])
    throw ShapeError("conv3d: input channels " + std::to_string(xs[1]) +
                     " do not match kernel channels " + std::to_string(ws[1]));
  ConvDims d;
  d.B = xs[0]; d.C = xs[1]; d.D = xs[2]; d.H = xs[3]; d.W = xs[4];
  d.Co = ws[0]; d.kd = ws[2]; d.kh = ws[3]; d.kw = ws[4];
  if (d.D + 2 * s.pad_d < d.kd || d.H + 2 * s.pad_h < d.kh || d.W + 2 * s.pad_w < d.kw)
    throw ShapeError("conv3d: padded input smaller than kernel");
  if (s.stride_d < 1 || s.stride_h < 1 || s.stride_w < 1)
    throw ShapeError("conv3d: strides must be positive");
  d.Do = (d.D + 2 * s.pad_d - d.kd) / s.stride_d + 1;
  d.Ho = (d.H + 2 * s.pad_h - d.kh) / s.stride_h + 1;
  d.Wo = (d.W + 2 * s.pad_w - d.kw) / s.stride_w + 1;
  d.npos = static_cast<int64_t>(d.Do) * d.Ho * d.Wo;
  d.KK = d.C * d.kd * d.kh * d.kw;
  return d;
}

/// Runs of consecutive tile positions sharing one output (d,h) row; lets
/// gather/scatter move whole contiguous spans when stride_w == 1.
struct TileRows {
  struct Seg { int j0, len, d, h, w0; };
  Seg segs[kConvTile];
  int count = 0;

  TileRows(const ConvDims& g, int64_t pos0, int tw) {
    const int64_t hw = static_cast<int64_t>(g.Ho) * g.Wo;
    int d = static_cast<int>(pos0 / hw);
    int rem = static_cast<int>(pos0 % hw);
    int h = rem / g.Wo;
    int w = rem % g.Wo;
    int j = 0;
    while (j < tw) {
      const int len = std::min(tw - j, g.Wo - w);
      segs[count++] = {j, len, d, h, w};
      j += len;
      w += len;
      if (w == g.Wo) { w = 0; if (++h == g.Ho) { h = 0; ++d; } }
    }
  }
};

/// Gather one patch-matrix tile: patch[kk][j] = padded input at output
/// position (pos0+j) under kernel offset kk. Out-of-range taps are zero.
inline void gather_tile(const float* x, const ConvDims& g, const Conv3dSpec& s,
                        const TileRows& rows, float* patch) {
  for (int c = 0; c < g.C; ++c) {
    const float* xc = x + static_cast<size_t>(c) * g.D * g.H * g.W;
    for (int u = 0; u < g.kd; ++u)
      for (int v = 0; v < g.kh; ++v)
        for (int t = 0; t < g.kw; ++t) {
          const int kk = ((c * g.kd + u) * g.kh + v) * g.kw + t;
          float* row = patch + static_cast<size_t>(kk) * kConvTile;
          for (int si = 0; si < rows.count; ++si) {
            const TileRows::Seg& seg = rows.segs[si];
            float* dst = row + seg.j0;
            const int di = seg.d * s.stride_d + u - s.pad_d;
            const int hi = seg.h * s.stride_h + v - s.pad_h;
            if (static_cast<unsigned>(di) >= static_cast<unsigned>(g.D) ||
                static_cast<unsigned>(hi) >= static_cast<unsigned>(g.H)) {
              std::fill(dst, dst + seg.len, 0.0f);
              continue;
            }
            const float* src = xc + (static_cast<size_t>(di) * g.H + hi) * g.W;
            if (s.stride_w == 1) {
              const int wi0 = seg.w0 + t - s.pad_w;
              const int lead = std::clamp(-wi0, 0, seg.len);
              const int valid = std::clamp(g.W - wi0, 0, seg.len);
              std::fill(dst, dst + lead, 0.0f);
              if (valid > lead)
                std::memcpy(dst + lead, src + wi0 + lead,
                            static_cast<size_t>(valid - lead) * sizeof(float));
              std::fill(dst + std::max(valid, lead), dst + seg.len, 0.0f);
            } else {
              for (int i = 0; i < seg.len; ++i) {
                const int wi = (seg.w0 + i) * s.stride_w + t - s.pad_w;
                dst[i] = static_cast<unsigned>(wi) < static_cast<unsigned>(g.W) ? src[wi] : 0.0f;
              }
            }
          }
        }
  }
}

/// acc[r] <- acc[r] + w_r . patch, four output-channel rows at a time.
inline void gemm_rows4(const float* __restrict patch, int KK, int tw,
                       const float* __restrict w0row, const float* __restrict w1row,
                       const float* __restrict w2row, const float* __restrict w3row,
                       double* __restrict a0, double* __restrict a1,
                       double* __restrict a2, double* __restrict a3) {
  for (int kk = 0; kk < KK; ++kk) {
    const float* __restrict prow = patch + static_cast<size_t>(kk) * kConvTile;
    const double w0 = w0row[kk], w1 = w1row[kk], w2 = w2row[kk], w3 = w3row[kk];
    for (int j = 0; j < tw; ++j) {
      const double pj = prow[j];
      a0[j] += w0 * pj;
      a1[j] += w1 * pj;
      a2[j] += w2 * pj;
      a3[j] += w3 * pj;
    }
  }
}

/// Four simultaneous eight-lane dot products of one patch row against four
/// gradient rows. Fixed lane split: vectorizable yet deterministic.
inline void dot8x4(const float* __restrict p, const double* __restrict y0,
                   const double* __restrict y1, const double* __restrict y2,
                   const double* __restrict y3, int n, double out[4]) {
  double l0[8] = {0}, l1[8] = {0}, l2[8] = {0}, l3[8] = {0};
  int j = 0;
  for (; j + 8 <= n; j += 8)
    for (int r = 0; r < 8; ++r) {
      const double pv = p[j + r];
      l0[r] += pv * y0[j + r];
      l1[r] += pv * y1[j + r];
      l2[r] += pv * y2[j + r];
      l3[r] += pv * y3[j + r];
    }
  double t0 = 0, t1 = 0, t2 = 0, t3 = 0;
  for (; j < n; ++j) {
    const double pv = p[j];
    t0 += pv * y0[j]; t1 += pv * y1[j]; t2 += pv * y2[j]; t3 += pv * y3[j];
  }
  auto tree = [](const double l[8], double t) {
    return ((l[0] + l[1]) + (l[2] + l[3])) + ((l[4] + l[5]) + (l[6] + l[7])) + t;
  };
  out[0] = tree(l0, t0); out[1] = tree(l1, t1); out[2] = tree(l2, t2); out[3] = tree(l3, t3);
}

}  // namespace detail

/// Output shape of conv3d for the given input/kernel/geometry.
inline Shape conv3d_shape(const Shape& x, const Shape& w, const Conv3dSpec& s) {
  const detail::ConvDims g = detail::conv_dims(x, w, s);
  return Shape{g.B, g.Co, g.Do, g.Ho, g.Wo};
}

inline Tensor conv3d_fwd(const Tensor& x, const Tensor& w, const Tensor& bias,
                         const Conv3dSpec& s, int workers = 1) {
  using namespace detail;
  tune_allocator_once();
  const ConvDims g = conv_dims(x.shape, w.shape, s);
  if (bias.numel() > 0 && bias.numel() != g.Co)
    throw ShapeError("conv3d: bias length must equal output channels");
  Tensor y(Shape{g.B, g.Co, g.Do, g.Ho, g.Wo});
  const int64_t ntiles = (g.npos + kConvTile - 1) / kConvTile;
  const float* bp = bias.numel() > 0 ? bias.data.data() : nullptr;

  // Chunk tiles so each task reuses one scratch patch across several tiles.
  const int64_t target_tasks = static_cast<int64_t>(workers) * 4;
  const int64_t nchunks =
      std::clamp<int64_t>(target_tasks / std::max<int64_t>(g.B, 1), 1, ntiles);
  const int64_t chunk_tiles = (ntiles + nchunks - 1) / nchunks;

  parallel_for(static_cast<int64_t>(g.B) * nchunks, workers, [&](int64_t task) {
    const int b = static_cast<int>(task / nchunks);
    const int64_t tile0 = (task % nchunks) * chunk_tiles;
    const int64_t tile1 = std::min(tile0 + chunk_tiles, ntiles);
    auto patch = std::make_unique_for_overwrite<float[]>(
        static_cast<size_t>(g.KK) * kConvTile);
    alignas(64) double acc[4][kConvTile];

    for (int64_t tile = tile0; tile < tile1; ++tile) {
      const int64_t pos0 = tile * kConvTile;
      const int tw = static_cast<int>(std::min<int64_t>(kConvTile, g.npos - pos0));
      const TileRows rows(g, pos0, tw);
      gather_tile(x.data.data() + static_cast<size_t>(b) * g.C * g.D * g.H * g.W,
                  g, s, rows, patch.get());

      for (int co0 = 0; co0 < g.Co; co0 += 4) {
        const int nco = std::min(4, g.Co - co0);
        for (int r = 0; r < 4; ++r)
          for (int j = 0; j < tw; ++j) acc[r][j] = 0.0;
        const float* wr[4];
        for (int r = 0; r < 4; ++r)
          wr[r] = w.data.data() + static_cast<size_t>(co0 + std::min(r, nco - 1)) * g.KK;
        gemm_rows4(patch.get(), g.KK, tw, wr[0], wr[1], wr[2], wr[3],
                   acc[0], acc[1], acc[2], acc[3]);
        for (int r = 0; r < nco; ++r) {
          const double bv = bp ? bp[co0 + r] : 0.0;
          float* out = y.data.data() +
                       (static_cast<size_t>(b) * g.Co + co0 + r) * g.npos + pos0;
          for (int j = 0; j < tw; ++j) out[j] = static_cast<float>(acc[r][j] + bv);
        }
      }
    }
  });
  return y;
}

/// Backward pass. Each of dx/dw/db may be null to skip that gradient;
/// non-null pointers accumulate and must be sized like x, w and bias.
inline void conv3d_bwd(const Tensor& x, const Tensor& w, const Conv3dSpec& s,
                       const float* dy, float* dx, float* dw, float* db,
                       int workers = 1) {
  using namespace detail;
  const ConvDims g = conv_dims(x.shape, w.shape, s);
  const int64_t ntiles = (g.npos + kConvTile - 1) / kConvTile;

  // Per-sample partials keep the cross-sample reduction in a fixed order.
  std::vector<std::vector<double>> dw_part, db_part;
  if (dw) dw_part.assign(static_cast<size_t>(g.B),
                         std::vector<double>(static_cast<size_t>(g.Co) * g.KK, 0.0));
  if (db) db_part.assign(static_cast<size_t>(g.B),
                         std::vector<double>(static_cast<size_t>(g.Co), 0.0));

  parallel_for(g.B, workers, [&](int64_t bi) {
    const int b = static_cast<int>(bi);
    const float* dyb = dy + static_cast<size_t>(b) * g.Co * g.npos;
    std::vector<float> patch;
    std::vector<double> dyd;  // upstream gradient tile, converted once
    if (dw) patch.resize(static_cast<size_t>(g.KK) * kConvTile);
    if (dw || dx) dyd.resize(static_cast<size_t>(g.Co) * kConvTile);
    std::vector<float> wt;  // weights transposed to [kk][co] for the dx pass
    if (dx) {
      wt.resize(static_cast<size_t>(g.KK) * g.Co);
      for (int co = 0; co < g.Co; ++co)
        for (int kk = 0; kk < g.KK; ++kk)
          wt[static_cast<size_t>(kk) * g.Co + co] =
              w.data[static_cast<size_t>(co) * g.KK + kk];
    }

    for (int64_t tile = 0; tile < ntiles; ++tile) {
      const int64_t pos0 = tile * kConvTile;
      const int tw = static_cast<int>(std::min<int64_t>(kConvTile, g.npos - pos0));
      const TileRows rows(g, pos0, tw);
      if (dw)
        gather_tile(x.data.data() + static_cast<size_t>(b) * g.C * g.D * g.H * g.W,
                    g, s, rows, patch.data());
      if (dw || dx)
        for (int co = 0; co < g.Co; ++co) {
          const float* dyrow = dyb + static_cast<size_t>(co) * g.npos + pos0;
          double* out = dyd.data() + static_cast<size_t>(co) * kConvTile;
          for (int j = 0; j < tw; ++j) out[j] = dyrow[j];
        }

      if (dw) {
        std::vector<double>& part = dw_part[static_cast<size_t>(b)];
        for (int co0 = 0; co0 < g.Co; co0 += 4) {
          const int nco = std::min(4, g.Co - co0);
          const double* yr[4];
          for (int r = 0; r < 4; ++r)
            yr[r] = dyd.data() +
                    static_cast<size_t>(co0 + std::min(r, nco - 1)) * kConvTile;
          for (int kk = 0; kk < g.KK; ++kk) {
            double out[4];
            dot8x4(patch.data() + static_cast<size_t>(kk) * kConvTile,
                   yr[0], yr[1], yr[2], yr[3], tw, out);
            for (int r = 0; r < nco; ++r)
              part[static_cast<size_t>(co0 + r) * g.KK + kk] += out[r];
          }
        }
      }
      if (dx) {
        // One kernel offset at a time: accumulate over output channels into
        // a stack row, then scatter it straight into dx.
        float* dxb = dx + static_cast<size_t>(b) * g.C * g.D * g.H * g.W;
        alignas(64) double acc[kConvTile];
        for (int c = 0; c < g.C; ++c) {
          float* xc = dxb + static_cast<size_t>(c) * g.D * g.H * g.W;
          for (int u = 0; u < g.kd; ++u)
            for (int v = 0; v < g.kh; ++v)
              for (int t = 0; t < g.kw; ++t) {
                const int kk = ((c * g.kd + u) * g.kh + v) * g.kw + t;
                for (int j = 0; j < tw; ++j) acc[j] = 0.0;
                const float* __restrict wrow = wt.data() + static_cast<size_t>(kk) * g.Co;
                for (int co = 0; co < g.Co; ++co) {
                  const double wv = wrow[co];
                  const double* __restrict dyrow =
                      dyd.data() + static_cast<size_t>(co) * kConvTile;
                  for (int j = 0; j < tw; ++j) acc[j] += wv * dyrow[j];
                }
                for (int si = 0; si < rows.count; ++si) {
                  const TileRows::Seg& seg = rows.segs[si];
                  const double* srcd = acc + seg.j0;
                  const int di = seg.d * s.stride_d + u - s.pad_d;
                  const int hi = seg.h * s.stride_h + v - s.pad_h;
                  if (static_cast<unsigned>(di) >= static_cast<unsigned>(g.D) ||
                      static_cast<unsigned>(hi) >= static_cast<unsigned>(g.H))
                    continue;
                  float* dst = xc + (static_cast<size_t>(di) * g.H + hi) * g.W;
                  if (s.stride_w == 1) {
                    const int wi0 = seg.w0 + t - s.pad_w;
                    const int lead = std::clamp(-wi0, 0, seg.len);
                    const int valid = std::clamp(g.W - wi0, 0, seg.len);
                    float* __restrict out = dst + wi0;
                    for (int i = lead; i < valid; ++i) out[i] += static_cast<float>(srcd[i]);
                  } else {
                    for (int i = 0; i < seg.len; ++i) {
                      const int wi = (seg.w0 + i) * s.stride_w + t - s.pad_w;
                      if (static_cast<unsigned>(wi) < static_cast<unsigned>(g.W))
                        dst[wi] += static_cast<float>(srcd[i]);
                    }
                  }
                }
              }
        }
      }
    }
    if (db) {
      std::vector<double>& part = db_part[static_cast<size_t>(b)];
      for (int co = 0; co < g.Co; ++co) {
        const float* dyrow = dyb + static_cast<size_t>(co) * g.npos;
        double acc = 0.0;
        for (int64_t j = 0; j < g.npos; ++j) acc += dyrow[j];
        part[static_cast<size_t>(co)] = acc;
      }
    }
  });

  if (dw)
    for (int b = 0; b < g.B; ++b)
      for (size_t i = 0; i < dw_part[static_cast<size_t>(b)].size(); ++i)
        dw[i] += static_cast<float>(dw_part[static_cast<size_t>(b)][i]);
  if (db)
    for (int b = 0; b < g.B; ++b)
      for (int co = 0; co < g.Co; ++co)
        db[co] += static_cast<float>(db_part[static_cast<size_t>(b)][static_cast<size_t>(co)]);
}

inline Tensor relu_fwd(const Tensor& x) {
  Tensor y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
  return y;
}

inline void relu_bwd(const Tensor& x, const float* dy, float* dx) {
  for (size_t i = 0; i < x.data.size(); ++i)
    if (x.data[i] > 0.0f) dx[i] += dy[i];
}

inline Shape maxpool3d_shape(const Shape& x, const Pool3dSpec& p) {
  if (x.rank != 5) throw ShapeError("maxpool3d: input must be rank 5");
  if (p.win_d > x[2] || p.win_h > x[3] || p.win_w > x[4])
    throw ShapeError("maxpool3d: window larger than input extent");
  return Shape{x[0], x[1], (x[2] - p.win_d) / p.stride_d + 1,
               (x[3] - p.win_h) / p.stride_h + 1, (x[4] - p.win_w) / p.stride_w + 1};
}

/// Max pooling; ties go to the first window element in row-major order.
/// `argmax` (optional) receives the flat input index chosen per output.
inline Tensor maxpool3d_fwd(const Tensor& x, const Pool3dSpec& p,
                            std::vector<int64_t>* argmax = nullptr) {
  const Shape os = maxpool3d_shape(x.shape, p);
  Tensor y(os);
  if (argmax) argmax->assign(static_cast<size_t>(os.numel()), 0);
  const int C = x.shape[1], D = x.shape[2], H = x.shape[3], W = x.shape[4];
  int64_t o = 0;
  for (int b = 0; b < x.shape[0]; ++b)
    for (int c = 0; c < C; ++c) {
      const size_t base = (static_cast<size_t>(b) * C + c) * D * H * W;
      for (int d = 0; d < os[2]; ++d)
        for (int h = 0; h < os[3]; ++h)
          for (int w = 0; w < os[4]; ++w) {
            float best = -std::numeric_limits<float>::infinity();
            int64_t best_i = -1;
            for (int u = 0; u < p.win_d; ++u)
              for (int v = 0; v < p.win_h; ++v)
                for (int t = 0; t < p.win_w; ++t) {
                  const int64_t idx = static_cast<int64_t>(base) +
                      (static_cast<int64_t>(d * p.stride_d + u) * H +
                       (h * p.stride_h + v)) * W + (w * p.stride_w + t);
                  const float v_ = x.data[static_cast<size_t>(idx)];
                  if (v_ > best) { best = v_; best_i = idx; }
                }
            y.data[static_cast<size_t>(o)] = best;
            if (argmax) (*argmax)[static_cast<size_t>(o)] = best_i;
            ++o;
          }
    }
  return y;
}

inline void maxpool3d_bwd(const std::vector<int64_t>& argmax, const float* dy, float* dx) {
  for (size_t i = 0; i < argmax.size(); ++i)
    dx[static_cast<size_t>(argmax[i])] += dy[i];
}

/// Global average pool over depth/height/width: BxCxDxHxW -> BxC.
inline Tensor gap3d_fwd(const Tensor& x) {
  if (x.shape.rank != 5) throw ShapeError("gap3d: input must be rank 5");
  const int B = x.shape[0], C = x.shape[1];
  const int64_t vol = static_cast<int64_t>(x.shape[2]) * x.shape[3] * x.shape[4];
  Tensor y(Shape{B, C});
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const float* p = x.data.data() + (static_cast<size_t>(b) * C + c) * vol;
      double acc = 0.0;
      for (int64_t i = 0; i < vol; ++i) acc += p[i];
      y.data[static_cast<size_t>(b) * C + c] = static_cast<float>(acc / static_cast<double>(vol));
    }
  return y;
}

inline void gap3d_bwd(const Shape& x_shape, const float* dy, float* dx) {
  const int B = x_shape[0], C = x_shape[1];
  const int64_t vol = static_cast<int64_t>(x_shape[2]) * x_shape[3] * x_shape[4];
  const float inv = 1.0f / static_cast<float>(vol);
  for (int b = 0; b < B; ++b)
    for (int c = 0; c < C; ++c) {
      const float g = dy[static_cast<size_t>(b) * C + c] * inv;
      float* p = dx + (static_cast<size_t>(b) * C + c) * vol;
      for (int64_t i = 0; i < vol; ++i) p[i] += g;
    }
}

/// x: BxC, w: CxM, bias: M (or empty) -> BxM.
inline Tensor dense_fwd(const Tensor& x, const Tensor& w, const Tensor& bias) {
  if (x.shape.rank != 2 || w.shape.rank != 2 || x.shape[1] != w.shape[0])
    throw ShapeError("dense: need BxC input and CxM weights with matching C");
  const int B = x.shape[0], C = x.shape[1], M = w.shape[1];
  if (bias.numel() > 0 && bias.numel() != M)
    throw ShapeError("dense: bias length must equal output width");
  Tensor y(Shape{B, M});
  for (int b = 0; b < B; ++b)
    for (int m = 0; m < M; ++m) {
      double acc = bias.numel() > 0 ? bias.data[static_cast<size_t>(m)] : 0.0;
      for (int c = 0; c < C; ++c)
        acc += static_cast<double>(x.data[static_cast<size_t>(b) * C + c]) *
               w.data[static_cast<size_t>(c) * M + m];
      y.data[static_cast<size_t>(b) * M + m] = static_cast<float>(acc);
    }
  return y;
}

inline void dense_bwd(const Tensor& x, const Tensor& w, const float* dy,
                      float* dx, float* dw, float* db) {
  const int B = x.shape[0], C = x.shape[1], M = w.shape[1];
  if (dx)
    for (int b = 0; b < B; ++b)
      for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int m = 0; m < M; ++m)
          acc += static_cast<double>(dy[static_cast<size_t>(b) * M + m]) *
                 w.data[static_cast<size_t>(c) * M + m];
        dx[static_cast<size_t>(b) * C + c] += static_cast<float>(acc);
      }
  if (dw)
    for (int c = 0; c < C; ++c)
      for (int m = 0; m < M; ++m) {
        double acc = 0.0;
        for (int b = 0; b < B; ++b)
          acc += static_cast<double>(x.data[static_cast<size_t>(b) * C + c]) *
                 dy[static_cast<size_t>(b) * M + m];
        dw[static_cast<size_t>(c) * M + m] += static_cast<float>(acc);
      }
  if (db)
    for (int m = 0; m < M; ++m) {
      double acc = 0.0;
      for (int b = 0; b < B; ++b) acc += dy[static_cast<size_t>(b) * M + m];
      db[m] += static_cast<float>(acc);
    }
}

inline Tensor sigmoid_fwd(const Tensor& x) {
  Tensor y(x.shape);
  for (size_t i = 0; i < x.data.size(); ++i)
    y.data[i] = static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(x.data[i]))));
  return y;
}

inline void sigmoid_bwd(const Tensor& y, const float* dy, float* dx) {
  for (size_t i = 0; i < y.data.size(); ++i)
    dx[i] += dy[i] * y.data[i] * (1.0f - y.data[i]);
}

inline constexpr double kProbClamp = 1e-7;

/// Binary cross-entropy over probabilities, mean over the batch. `p` holds
/// one probability per sample (any shape with numel == labels.size()).
inline Tensor bce_fwd(const Tensor& p, const std::vector<float>& labels) {
  if (static_cast<size_t>(p.numel()) != labels.size())
    throw ShapeError("bce: probability count does not match label count");
  if (labels.empty()) throw ShapeError("bce: empty batch");
  double acc = 0.0;
  for (size_t i = 0; i < labels.size(); ++i) {
    const double pc = std::clamp(static_cast<double>(p.data[i]), kProbClamp, 1.0 - kProbClamp);
    const double y = labels[i];
    acc += y * std::log(pc) + (1.0 - y) * std::log(1.0 - pc);
  }
  Tensor loss(Shape{1});
  loss.data[0] = static_cast<float>(-acc / static_cast<double>(labels.size()));
  return loss;
}

/// Gradient w.r.t. p. The clamp acts on the value only; the gradient passes
/// through so that the usual sigmoid+BCE composition stays (p - y)/B.
inline void bce_bwd(const Tensor& p, const std::vector<float>& labels,
                    const float* dloss, float* dp) {
  const double g = dloss[0];
  const double n = static_cast<double>(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) {
    const double pc = std::clamp(static_cast<double>(p.data[i]), kProbClamp, 1.0 - kProbClamp);
    const double y = labels[i];
    dp[i] += static_cast<float>(g * (pc - y) / (pc * (1.0 - pc) * n));
  }
}

}  // namespace hiveguard
