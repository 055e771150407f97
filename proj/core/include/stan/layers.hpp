#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "stan/tensor.hpp"

// Low-level layer kernels.  Every kernel is templated on the scalar type:
// the runtime uses float, while numerical tests instantiate double to push
// finite-difference checks below float round-off noise.
namespace stan::nn {

// ---------------------------------------------------------------------------
// 3x3 convolution, stride 1, zero padding 1 (spatial size preserved).
// x: (N, IC, H, W)   w: (OC, IC, 3, 3)   bias: OC   y: (N, OC, H, W)
// ---------------------------------------------------------------------------
template <typename T>
void conv3x3_forward(const TensorT<T>& x, const TensorT<T>& w,
                     const std::vector<T>& bias, TensorT<T>& y) {
  const Shape xs = x.shape();
  const int oc_count = w.shape().n;
  if (w.shape().c != xs.c || w.shape().h != 3 || w.shape().w != 3)
    throw ShapeError("conv3x3: weight shape " + w.shape().str() +
                     " does not match input " + xs.str());
  y.resize({xs.n, oc_count, xs.h, xs.w});
  for (int n = 0; n < xs.n; ++n)
    for (int oc = 0; oc < oc_count; ++oc)
      for (int i = 0; i < xs.h; ++i)
        for (int ic = 0; ic < xs.c; ++ic)
          for (int di = 0; di < 3; ++di) {
            const int si = i + di - 1;
            if (si < 0 || si >= xs.h) continue;
            const T* __restrict xrow = &x.at(n, ic, si, 0);
            const T* __restrict wrow = &w.at(oc, ic, di, 0);
            T* __restrict yrow = &y.at(n, oc, i, 0);
            // dj = 0,1,2 maps to source column j-1, j, j+1.
            for (int j = 1; j < xs.w - 1; ++j)
              yrow[j] += wrow[0] * xrow[j - 1] + wrow[1] * xrow[j] + wrow[2] * xrow[j + 1];
            if (xs.w == 1) {
              yrow[0] += wrow[1] * xrow[0];
            } else {
              yrow[0] += wrow[1] * xrow[0] + wrow[2] * xrow[1];
              const int j = xs.w - 1;
              yrow[j] += wrow[0] * xrow[j - 1] + wrow[1] * xrow[j];
            }
          }
  for (int n = 0; n < xs.n; ++n)
    for (int oc = 0; oc < oc_count; ++oc) {
      T* plane = &y.at(n, oc, 0, 0);
      const T b = bias[oc];
      for (long p = 0; p < static_cast<long>(xs.h) * xs.w; ++p) plane[p] += b;
    }
}

template <typename T>
void conv3x3_backward(const TensorT<T>& x, const TensorT<T>& w,
                      const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* gw,
                      std::vector<T>* gb) {
  const Shape xs = x.shape();
  const int oc_count = w.shape().n;
  if (gx) gx->resize(xs);
  if (gw) gw->resize(w.shape());
  if (gb) gb->assign(oc_count, T(0));
  for (int n = 0; n < xs.n; ++n)
    for (int oc = 0; oc < oc_count; ++oc) {
      for (int i = 0; i < xs.h; ++i) {
        const T* grow = &gy.at(n, oc, i, 0);
        if (gb) {
          T acc = T(0);
          for (int j = 0; j < xs.w; ++j) acc += grow[j];
          (*gb)[oc] += acc;
        }
        for (int ic = 0; ic < xs.c; ++ic)
          for (int di = 0; di < 3; ++di) {
            const int si = i + di - 1;
            if (si < 0 || si >= xs.h) continue;
            const T* __restrict xrow = &x.at(n, ic, si, 0);
            const T* __restrict wrow = &w.at(oc, ic, di, 0);
            // Per column offset dj, the contributing output columns are
            // those whose source column j + dj - 1 stays in range; both
            // updates below are then branch-free stride-1 loops.
            for (int dj = 0; dj < 3; ++dj) {
              const int lo = std::max(0, 1 - dj);
              const int hi = std::min(xs.w, xs.w + 1 - dj);
              if (gx) {
                T* __restrict gxrow = &gx->at(n, ic, si, dj - 1 + lo);
                const T wv = wrow[dj];
                for (int j = lo; j < hi; ++j) gxrow[j - lo] += grow[j] * wv;
              }
              if (gw) {
                const T* __restrict xoff = xrow + dj - 1 + lo;
                T acc = T(0);
#pragma omp simd reduction(+ : acc)
                for (int j = lo; j < hi; ++j) acc += grow[j] * xoff[j - lo];
                gw->at(oc, ic, di, dj) += acc;
              }
            }
          }
      }
    }
}

// ---------------------------------------------------------------------------
// Batch normalization over (N, H, W) per channel.
// Normalization uses biased batch variance; running statistics use the same
// convention so that train and eval agree in the large-batch limit.
// ---------------------------------------------------------------------------
template <typename T>
struct BnCache {
  std::vector<T> mean, inv_std;
  TensorT<T> xhat;
};

template <typename T>
void batchnorm_forward_train(const TensorT<T>& x, const std::vector<T>& gamma,
                             const std::vector<T>& beta,
                             std::vector<T>& running_mean,
                             std::vector<T>& running_var, T momentum, T eps,
                             TensorT<T>& y, BnCache<T>& cache) {
  const Shape s = x.shape();
  const long m = static_cast<long>(s.n) * s.h * s.w;
  if (m == 0) throw ShapeError("batchnorm: empty batch");
  y.resize(s);
  cache.mean.assign(s.c, T(0));
  cache.inv_std.assign(s.c, T(0));
  cache.xhat.resize(s);
  for (int c = 0; c < s.c; ++c) {
    T sum = T(0), sq = T(0);
    for (int n = 0; n < s.n; ++n) {
      const T* px = &x.at(n, c, 0, 0);
      for (long p = 0; p < static_cast<long>(s.h) * s.w; ++p) {
        sum += px[p];
        sq += px[p] * px[p];
      }
    }
    const T mean = sum / static_cast<T>(m);
    T var = sq / static_cast<T>(m) - mean * mean;
    if (var < T(0)) var = T(0);
    const T inv_std = T(1) / std::sqrt(var + eps);
    cache.mean[c] = mean;
    cache.inv_std[c] = inv_std;
    running_mean[c] = (T(1) - momentum) * running_mean[c] + momentum * mean;
    running_var[c] = (T(1) - momentum) * running_var[c] + momentum * var;
    for (int n = 0; n < s.n; ++n) {
      const T* px = &x.at(n, c, 0, 0);
      T* ph = &cache.xhat.at(n, c, 0, 0);
      T* py = &y.at(n, c, 0, 0);
      for (long p = 0; p < static_cast<long>(s.h) * s.w; ++p) {
        ph[p] = (px[p] - mean) * inv_std;
        py[p] = gamma[c] * ph[p] + beta[c];
      }
    }
  }
}

template <typename T>
void batchnorm_forward_eval(const TensorT<T>& x, const std::vector<T>& gamma,
                            const std::vector<T>& beta,
                            const std::vector<T>& running_mean,
                            const std::vector<T>& running_var, T eps,
                            TensorT<T>& y) {
  const Shape s = x.shape();
  y.resize(s);
  for (int c = 0; c < s.c; ++c) {
    const T inv_std = T(1) / std::sqrt(running_var[c] + eps);
    const T scale = gamma[c] * inv_std;
    const T shift = beta[c] - running_mean[c] * scale;
    for (int n = 0; n < s.n; ++n) {
      const T* px = &x.at(n, c, 0, 0);
      T* py = &y.at(n, c, 0, 0);
      for (long p = 0; p < static_cast<long>(s.h) * s.w; ++p)
        py[p] = scale * px[p] + shift;
    }
  }
}

template <typename T>
void batchnorm_backward(const BnCache<T>& cache, const std::vector<T>& gamma,
                        const TensorT<T>& gy, TensorT<T>& gx,
                        std::vector<T>& ggamma, std::vector<T>& gbeta) {
  const Shape s = cache.xhat.shape();
  const long m = static_cast<long>(s.n) * s.h * s.w;
  gx.resize(s);
  ggamma.assign(s.c, T(0));
  gbeta.assign(s.c, T(0));
  for (int c = 0; c < s.c; ++c) {
    T sum_g = T(0), sum_gh = T(0);
    for (int n = 0; n < s.n; ++n) {
      const T* pg = &gy.at(n, c, 0, 0);
      const T* ph = &cache.xhat.at(n, c, 0, 0);
      for (long p = 0; p < static_cast<long>(s.h) * s.w; ++p) {
        sum_g += pg[p];
        sum_gh += pg[p] * ph[p];
      }
    }
    ggamma[c] = sum_gh;
    gbeta[c] = sum_g;
    const T k = gamma[c] * cache.inv_std[c] / static_cast<T>(m);
    for (int n = 0; n < s.n; ++n) {
      const T* pg = &gy.at(n, c, 0, 0);
      const T* ph = &cache.xhat.at(n, c, 0, 0);
      T* px = &gx.at(n, c, 0, 0);
      for (long p = 0; p < static_cast<long>(s.h) * s.w; ++p)
        px[p] = k * (static_cast<T>(m) * pg[p] - sum_g - ph[p] * sum_gh);
    }
  }
}

// ---------------------------------------------------------------------------
// ReLU
// ---------------------------------------------------------------------------
template <typename T>
void relu_forward(const TensorT<T>& x, TensorT<T>& y) {
  y.resize(x.shape());
  for (size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

template <typename T>
void relu_backward(const TensorT<T>& x, const TensorT<T>& gy, TensorT<T>& gx) {
  gx.resize(x.shape());
  for (size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > T(0) ? gy[i] : T(0);
}

// ---------------------------------------------------------------------------
// 2x2 max pooling, stride 2.  Odd trailing rows/columns are dropped (floor
// semantics).  argmax caches the flat input index of each pooled maximum for
// the backward pass.
// ---------------------------------------------------------------------------
template <typename T>
void maxpool2_forward(const TensorT<T>& x, TensorT<T>& y,
                      std::vector<long>& argmax) {
  const Shape s = x.shape();
  const int oh = s.h / 2, ow = s.w / 2;
  if (oh == 0 || ow == 0)
    throw ShapeError("maxpool2: input " + s.str() + " too small to pool");
  y.resize({s.n, s.c, oh, ow});
  argmax.assign(y.size(), -1);
  size_t o = 0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int i = 0; i < oh; ++i)
        for (int j = 0; j < ow; ++j, ++o) {
          long best_idx = -1;
          T best = T(0);
          for (int di = 0; di < 2; ++di)
            for (int dj = 0; dj < 2; ++dj) {
              const long idx =
                  ((static_cast<long>(n) * s.c + c) * s.h + 2 * i + di) * s.w +
                  2 * j + dj;
              const T v = x[idx];
              if (best_idx < 0 || v > best) {
                best = v;
                best_idx = idx;
              }
            }
          y[o] = best;
          argmax[o] = best_idx;
        }
}

template <typename T>
void maxpool2_backward(const std::vector<long>& argmax, const TensorT<T>& gy,
                       const Shape& input_shape, TensorT<T>& gx) {
  gx.resize(input_shape);
  for (size_t o = 0; o < gy.size(); ++o) gx[argmax[o]] += gy[o];
}

// ---------------------------------------------------------------------------
// Dense (fully connected).  The input is treated as (N, K) where K is the
// flattened per-item size.  w: (out, K), y: (N, out, 1, 1).
// ---------------------------------------------------------------------------
template <typename T>
void dense_forward(const TensorT<T>& x, const TensorT<T>& w,
                   const std::vector<T>& bias, TensorT<T>& y) {
  const long k = x.shape().per_item();
  const int out = w.shape().n;
  if (w.shape().per_item() != k)
    throw ShapeError("dense: weight expects " +
                     std::to_string(w.shape().per_item()) + " inputs, got " +
                     std::to_string(k));
  y.resize({x.shape().n, out, 1, 1});
  for (int n = 0; n < x.shape().n; ++n) {
    const T* px = x.data() + static_cast<size_t>(n) * k;
    T* py = y.data() + static_cast<size_t>(n) * out;
    for (int o = 0; o < out; ++o) {
      const T* __restrict pw = w.data() + static_cast<size_t>(o) * k;
      T acc = bias[o];
#pragma omp simd reduction(+ : acc)
      for (long i = 0; i < k; ++i) acc += pw[i] * px[i];
      py[o] = acc;
    }
  }
}

template <typename T>
void dense_backward(const TensorT<T>& x, const TensorT<T>& w,
                    const TensorT<T>& gy, TensorT<T>* gx, TensorT<T>* gw,
                    std::vector<T>* gb) {
  const long k = x.shape().per_item();
  const int out = w.shape().n;
  if (gx) gx->resize(x.shape());
  if (gw) gw->resize(w.shape());
  if (gb) gb->assign(out, T(0));
  for (int n = 0; n < x.shape().n; ++n) {
    const T* px = x.data() + static_cast<size_t>(n) * k;
    const T* pg = gy.data() + static_cast<size_t>(n) * out;
    T* pgx = gx ? gx->data() + static_cast<size_t>(n) * k : nullptr;
    for (int o = 0; o < out; ++o) {
      const T g = pg[o];
      const T* __restrict pw = w.data() + static_cast<size_t>(o) * k;
      if (gb) (*gb)[o] += g;
      if (pgx) {
        T* __restrict pg_row = pgx;
        for (long i = 0; i < k; ++i) pg_row[i] += g * pw[i];
      }
      if (gw) {
        T* __restrict pgw = gw->data() + static_cast<size_t>(o) * k;
        for (long i = 0; i < k; ++i) pgw[i] += g * px[i];
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Row-wise softmax over the per-item dimension.
// ---------------------------------------------------------------------------
template <typename T>
void softmax_forward(const TensorT<T>& x, TensorT<T>& y) {
  const long k = x.shape().per_item();
  y.resize(x.shape());
  for (int n = 0; n < x.shape().n; ++n) {
    const T* px = x.data() + static_cast<size_t>(n) * k;
    T* py = y.data() + static_cast<size_t>(n) * k;
    T mx = px[0];
    for (long i = 1; i < k; ++i) mx = std::max(mx, px[i]);
    T total = T(0);
    for (long i = 0; i < k; ++i) {
      py[i] = std::exp(px[i] - mx);
      total += py[i];
    }
    for (long i = 0; i < k; ++i) py[i] /= total;
  }
}

template <typename T>
void softmax_backward(const TensorT<T>& y, const TensorT<T>& gy,
                      TensorT<T>& gx) {
  const long k = y.shape().per_item();
  gx.resize(y.shape());
  for (int n = 0; n < y.shape().n; ++n) {
    const T* py = y.data() + static_cast<size_t>(n) * k;
    const T* pg = gy.data() + static_cast<size_t>(n) * k;
    T* px = gx.data() + static_cast<size_t>(n) * k;
    T dot = T(0);
    for (long i = 0; i < k; ++i) dot += pg[i] * py[i];
    for (long i = 0; i < k; ++i) px[i] = py[i] * (pg[i] - dot);
  }
}

}  // namespace stan::nn
