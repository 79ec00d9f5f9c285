#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "vrlab/errors.hpp"
#include "vrlab/numerics/gemm.hpp"
#include "vrlab/numerics/probe.hpp"
#include "vrlab/numerics/tape.hpp"
#include "vrlab/numerics/tensor.hpp"

namespace vrlab {

enum class Act { identity, relu, crelu, tanh };

namespace detail {

template <typename T>
inline bool track(Tape<T>* tape, std::initializer_list<const TensorPtr<T>*> ins) {
  if (!tape) return false;
  for (auto* p : ins)
    if ((*p)->requires_grad) return true;
  return false;
}

// Rows of a [B, ...] tensor viewed as a matrix.
template <typename T>
inline int64_t row_features(const Tensor<T>& t) {
  if (t.ndim() < 2) throw ConfigError("op expects a batched tensor, got shape " + shape_str(t.shape));
  return t.numel() / t.dim(0);
}

template <typename T>
inline void im2col(const T* img, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
                   int64_t stride, int64_t Ho, int64_t Wo, T* col) {
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx) {
        T* dst = col + ((c * kh + ky) * kw + kx) * (Ho * Wo);
        for (int64_t oy = 0; oy < Ho; ++oy) {
          const T* src = img + c * H * W + (oy * stride + ky) * W + kx;
          if (stride == 1) {
            std::copy(src, src + Wo, dst);
          } else {
            for (int64_t ox = 0; ox < Wo; ++ox) dst[ox] = src[ox * stride];
          }
          dst += Wo;
        }
      }
    }
  }
}

template <typename T>
inline void col2im_add(const T* col, int64_t C, int64_t H, int64_t W, int64_t kh, int64_t kw,
                       int64_t stride, int64_t Ho, int64_t Wo, T* img) {
  for (int64_t c = 0; c < C; ++c) {
    for (int64_t ky = 0; ky < kh; ++ky) {
      for (int64_t kx = 0; kx < kw; ++kx) {
        const T* src = col + ((c * kh + ky) * kw + kx) * (Ho * Wo);
        for (int64_t oy = 0; oy < Ho; ++oy) {
          T* dst = img + c * H * W + (oy * stride + ky) * W + kx;
          for (int64_t ox = 0; ox < Wo; ++ox) dst[ox * stride] += src[oy * Wo + ox];
        }
      }
    }
  }
}

}  // namespace detail

// y[B,O] = x[B,I] . w[O,I]^T + b[O]
template <typename T>
TensorPtr<T> linear(Tape<T>* tape, const TensorPtr<T>& x, const TensorPtr<T>& w,
                    const TensorPtr<T>& b) {
  const int64_t B = x->dim(0);
  const int64_t I = detail::row_features(*x);
  if (w->ndim() != 2 || w->dim(1) != I || b->numel() != w->dim(0))
    throw ConfigError("linear: shape mismatch x" + shape_str(x->shape) + " w" + shape_str(w->shape));
  const int64_t O = w->dim(0);

  auto y = make_tensor<T>({B, O});
  for (int64_t i = 0; i < B; ++i) std::copy(b->data.begin(), b->data.end(), y->data.begin() + i * O);
  std::vector<T> wt(static_cast<size_t>(I * O));
  transpose(w->data.data(), wt.data(), I, O);
  gemm_nn_acc(x->data.data(), wt.data(), y->data.data(), B, I, O);

  if (detail::track(tape, {&x, &w, &b})) {
    y->requires_grad = true;
    y->ensure_grad();
    if (x->requires_grad) x->ensure_grad();
    w->ensure_grad();
    b->ensure_grad();
    tape->push([x, w, b, y, B, I, O] {
      const T* dy = y->grad.data();
      if (x->requires_grad) gemm_nn_acc(dy, w->data.data(), x->grad.data(), B, O, I);
      gemm_tn_acc(dy, x->data.data(), w->grad.data(), O, B, I);
      for (int64_t i = 0; i < B; ++i)
        for (int64_t o = 0; o < O; ++o) b->grad[o] += dy[i * O + o];
    });
  }
  return y;
}

// Valid (no padding) 2-d convolution, y[B,F,Ho,Wo] = x[B,C,H,W] * k[F,C,kh,kw].
template <typename T>
TensorPtr<T> conv2d(Tape<T>* tape, const TensorPtr<T>& x, const TensorPtr<T>& k, int64_t stride) {
  if (x->ndim() != 4 || k->ndim() != 4 || x->dim(1) != k->dim(1))
    throw ConfigError("conv2d: shape mismatch x" + shape_str(x->shape) + " k" + shape_str(k->shape));
  if (stride < 1) throw ConfigError("conv2d: stride must be >= 1");
  const int64_t B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
  const int64_t F = k->dim(0), kh = k->dim(2), kw = k->dim(3);
  if (kh > H || kw > W) throw ConfigError("conv2d: kernel larger than input");
  const int64_t Ho = (H - kh) / stride + 1;
  const int64_t Wo = (W - kw) / stride + 1;
  const int64_t K = C * kh * kw;
  const int64_t N = Ho * Wo;

  auto y = make_tensor<T>({B, F, Ho, Wo});
  std::vector<T> col(static_cast<size_t>(K * N));
  for (int64_t i = 0; i < B; ++i) {
    detail::im2col(x->data.data() + i * C * H * W, C, H, W, kh, kw, stride, Ho, Wo, col.data());
    gemm_nn_acc(k->data.data(), col.data(), y->data.data() + i * F * N, F, K, N);
  }

  if (detail::track(tape, {&x, &k})) {
    y->requires_grad = true;
    y->ensure_grad();
    if (x->requires_grad) x->ensure_grad();
    k->ensure_grad();
    tape->push([x, k, y, stride, B, C, H, W, F, kh, kw, Ho, Wo, K, N] {
      // im2col is recomputed here; it is cheap next to the GEMMs.
      std::vector<T> col(static_cast<size_t>(K * N));
      std::vector<T> colt(static_cast<size_t>(N * K));
      std::vector<T> dcol;
      for (int64_t i = 0; i < B; ++i) {
        detail::im2col(x->data.data() + i * C * H * W, C, H, W, kh, kw, stride, Ho, Wo, col.data());
        transpose(col.data(), colt.data(), N, K);
        const T* dy = y->grad.data() + i * F * N;
        gemm_nn_acc(dy, colt.data(), k->grad.data(), F, N, K);
        if (x->requires_grad) {
          dcol.assign(static_cast<size_t>(K * N), T(0));
          gemm_tn_acc(k->data.data(), dy, dcol.data(), K, F, N);
          detail::col2im_add(dcol.data(), C, H, W, kh, kw, stride, Ho, Wo,
                             x->grad.data() + i * C * H * W);
        }
      }
    });
  }
  return y;
}

// y = x + b broadcast over channels of [B,F,H,W].
template <typename T>
TensorPtr<T> bias_channels(Tape<T>* tape, const TensorPtr<T>& x, const TensorPtr<T>& b) {
  if (x->ndim() != 4 || b->numel() != x->dim(1))
    throw ConfigError("bias_channels: shape mismatch");
  const int64_t B = x->dim(0), F = x->dim(1), HW = x->dim(2) * x->dim(3);
  auto y = make_tensor<T>(x->shape);
  for (int64_t i = 0; i < B; ++i)
    for (int64_t f = 0; f < F; ++f) {
      const T bias = b->data[f];
      const T* src = x->data.data() + (i * F + f) * HW;
      T* dst = y->data.data() + (i * F + f) * HW;
      for (int64_t p = 0; p < HW; ++p) dst[p] = src[p] + bias;
    }

  if (detail::track(tape, {&x, &b})) {
    y->requires_grad = true;
    y->ensure_grad();
    if (x->requires_grad) x->ensure_grad();
    b->ensure_grad();
    tape->push([x, b, y, B, F, HW] {
      const T* dy = y->grad.data();
      for (int64_t i = 0; i < B; ++i)
        for (int64_t f = 0; f < F; ++f) {
          const T* g = dy + (i * F + f) * HW;
          T acc = T(0);
          for (int64_t p = 0; p < HW; ++p) acc += g[p];
          b->grad[f] += acc;
          if (x->requires_grad) {
            T* dst = x->grad.data() + (i * F + f) * HW;
            for (int64_t p = 0; p < HW; ++p) dst[p] += g[p];
          }
        }
    });
  }
  return y;
}

// relu / crelu / tanh / identity. crelu concatenates [relu(x), relu(-x)] along
// the feature axis and therefore doubles the feature dimension; it is defined
// for [B,D] inputs. `probe`, when given, counts positives for relu and crelu
// outputs only.
template <typename T>
TensorPtr<T> activate(Tape<T>* tape, const TensorPtr<T>& x, Act kind, FauProbe* probe = nullptr) {
  if (kind == Act::identity) return x;

  TensorPtr<T> y;
  if (kind == Act::relu) {
    y = make_tensor<T>(x->shape);
    for (int64_t i = 0; i < x->numel(); ++i) y->data[i] = x->data[i] > T(0) ? x->data[i] : T(0);
  } else if (kind == Act::crelu) {
    if (x->ndim() != 2) throw ConfigError("crelu: expects [B,D] input");
    const int64_t B = x->dim(0), D = x->dim(1);
    y = make_tensor<T>({B, 2 * D});
    for (int64_t i = 0; i < B; ++i)
      for (int64_t j = 0; j < D; ++j) {
        const T v = x->data[i * D + j];
        y->data[i * 2 * D + j] = v > T(0) ? v : T(0);
        y->data[i * 2 * D + D + j] = v < T(0) ? -v : T(0);
      }
  } else {  // tanh
    y = make_tensor<T>(x->shape);
    for (int64_t i = 0; i < x->numel(); ++i) y->data[i] = std::tanh(x->data[i]);
  }

  if (probe && (kind == Act::relu || kind == Act::crelu)) probe->observe(y->data.data(), y->numel());

  if (detail::track(tape, {&x})) {
    y->requires_grad = true;
    y->ensure_grad();
    x->ensure_grad();
    tape->push([x, y, kind] {
      if (kind == Act::relu) {
        for (int64_t i = 0; i < x->numel(); ++i)
          if (x->data[i] > T(0)) x->grad[i] += y->grad[i];
      } else if (kind == Act::crelu) {
        const int64_t B = x->dim(0), D = x->dim(1);
        for (int64_t i = 0; i < B; ++i)
          for (int64_t j = 0; j < D; ++j) {
            const T v = x->data[i * D + j];
            if (v > T(0)) x->grad[i * D + j] += y->grad[i * 2 * D + j];
            if (v < T(0)) x->grad[i * D + j] -= y->grad[i * 2 * D + D + j];
          }
      } else {
        for (int64_t i = 0; i < x->numel(); ++i)
          x->grad[i] += y->grad[i] * (T(1) - y->data[i] * y->data[i]);
      }
    });
  }
  return y;
}

// Per-sample normalization over all trailing dims, then affine gain/bias.
// eps = 1e-5 sits inside the square root.
template <typename T>
TensorPtr<T> layer_norm(Tape<T>* tape, const TensorPtr<T>& x, const TensorPtr<T>& gain,
                        const TensorPtr<T>& bias) {
  const int64_t B = x->dim(0);
  const int64_t D = detail::row_features(*x);
  if (gain->numel() != D || bias->numel() != D)
    throw ConfigError("layer_norm: gain/bias must have " + std::to_string(D) + " entries");
  constexpr T eps = T(1e-5);

  auto y = make_tensor<T>(x->shape);
  auto xhat = std::make_shared<std::vector<T>>(static_cast<size_t>(B * D));
  auto inv_std = std::make_shared<std::vector<T>>(static_cast<size_t>(B));
  for (int64_t i = 0; i < B; ++i) {
    const T* row = x->data.data() + i * D;
    T mean = T(0);
    for (int64_t j = 0; j < D; ++j) mean += row[j];
    mean /= T(D);
    T var = T(0);
    for (int64_t j = 0; j < D; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= T(D);
    const T inv = T(1) / std::sqrt(var + eps);
    (*inv_std)[i] = inv;
    for (int64_t j = 0; j < D; ++j) {
      const T xh = (row[j] - mean) * inv;
      (*xhat)[i * D + j] = xh;
      y->data[i * D + j] = xh * gain->data[j] + bias->data[j];
    }
  }

  if (detail::track(tape, {&x, &gain, &bias})) {
    y->requires_grad = true;
    y->ensure_grad();
    if (x->requires_grad) x->ensure_grad();
    gain->ensure_grad();
    bias->ensure_grad();
    tape->push([x, gain, bias, y, xhat, inv_std, B, D] {
      for (int64_t i = 0; i < B; ++i) {
        const T* dy = y->grad.data() + i * D;
        const T* xh = xhat->data() + i * D;
        T sum_dxh = T(0), sum_dxh_xh = T(0);
        for (int64_t j = 0; j < D; ++j) {
          const T dxh = dy[j] * gain->data[j];
          sum_dxh += dxh;
          sum_dxh_xh += dxh * xh[j];
          gain->grad[j] += dy[j] * xh[j];
          bias->grad[j] += dy[j];
        }
        if (x->requires_grad) {
          const T inv = (*inv_std)[i];
          for (int64_t j = 0; j < D; ++j) {
            const T dxh = dy[j] * gain->data[j];
            x->grad[i * D + j] += inv * (dxh - sum_dxh / T(D) - xh[j] * sum_dxh_xh / T(D));
          }
        }
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> concat_cols(Tape<T>* tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  const int64_t B = a->dim(0);
  if (b->dim(0) != B) throw ConfigError("concat_cols: batch mismatch");
  const int64_t Da = detail::row_features(*a), Db = detail::row_features(*b);
  auto y = make_tensor<T>({B, Da + Db});
  for (int64_t i = 0; i < B; ++i) {
    std::copy(a->data.begin() + i * Da, a->data.begin() + (i + 1) * Da, y->data.begin() + i * (Da + Db));
    std::copy(b->data.begin() + i * Db, b->data.begin() + (i + 1) * Db,
              y->data.begin() + i * (Da + Db) + Da);
  }
  if (detail::track(tape, {&a, &b})) {
    y->requires_grad = true;
    y->ensure_grad();
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    tape->push([a, b, y, B, Da, Db] {
      for (int64_t i = 0; i < B; ++i) {
        if (a->requires_grad)
          for (int64_t j = 0; j < Da; ++j) a->grad[i * Da + j] += y->grad[i * (Da + Db) + j];
        if (b->requires_grad)
          for (int64_t j = 0; j < Db; ++j) b->grad[i * Db + j] += y->grad[i * (Da + Db) + Da + j];
      }
    });
  }
  return y;
}

// w / sigma with sigma = u^T w v (u, v treated as constants). The backward pass
// handles sigma's dependence on w: dL/dW = g/sigma - <g,W>/sigma^2 * u v^T.
template <typename T>
TensorPtr<T> spectral_scale(Tape<T>* tape, const TensorPtr<T>& w, const TensorPtr<T>& u,
                            const TensorPtr<T>& v) {
  if (w->ndim() != 2 || u->numel() != w->dim(0) || v->numel() != w->dim(1))
    throw ConfigError("spectral_scale: shape mismatch");
  const int64_t O = w->dim(0), I = w->dim(1);
  T sigma = T(0);
  for (int64_t o = 0; o < O; ++o) {
    T dot = T(0);
    for (int64_t i = 0; i < I; ++i) dot += w->data[o * I + i] * v->data[i];
    sigma += u->data[o] * dot;
  }
  sigma = std::max(sigma, T(1e-12));
  auto y = make_tensor<T>(w->shape);
  for (int64_t i = 0; i < w->numel(); ++i) y->data[i] = w->data[i] / sigma;

  if (detail::track(tape, {&w})) {
    y->requires_grad = true;
    y->ensure_grad();
    w->ensure_grad();
    tape->push([w, u, v, y, sigma, O, I] {
      T gw = T(0);
      for (int64_t i = 0; i < w->numel(); ++i) gw += y->grad[i] * w->data[i];
      const T c = gw / (sigma * sigma);
      for (int64_t o = 0; o < O; ++o)
        for (int64_t i = 0; i < I; ++i)
          w->grad[o * I + i] += y->grad[o * I + i] / sigma - c * u->data[o] * v->data[i];
    });
  }
  return y;
}

// Mean squared error against a constant target; returns a [1] scalar.
template <typename T>
TensorPtr<T> mse_loss(Tape<T>* tape, const TensorPtr<T>& pred, const TensorPtr<T>& target) {
  if (pred->numel() != target->numel()) throw ConfigError("mse_loss: size mismatch");
  const int64_t N = pred->numel();
  auto y = make_tensor<T>({1});
  T acc = T(0);
  for (int64_t i = 0; i < N; ++i) {
    const T d = pred->data[i] - target->data[i];
    acc += d * d;
  }
  y->data[0] = acc / T(N);
  if (detail::track(tape, {&pred})) {
    y->requires_grad = true;
    y->ensure_grad();
    pred->ensure_grad();
    tape->push([pred, target, y, N] {
      const T g = y->grad[0] * T(2) / T(N);
      for (int64_t i = 0; i < N; ++i) pred->grad[i] += g * (pred->data[i] - target->data[i]);
    });
  }
  return y;
}

// Elementwise min; ties route the gradient to `a`.
template <typename T>
TensorPtr<T> min_elem(Tape<T>* tape, const TensorPtr<T>& a, const TensorPtr<T>& b) {
  if (a->numel() != b->numel()) throw ConfigError("min_elem: size mismatch");
  auto y = make_tensor<T>(a->shape);
  for (int64_t i = 0; i < a->numel(); ++i) y->data[i] = std::min(a->data[i], b->data[i]);
  if (detail::track(tape, {&a, &b})) {
    y->requires_grad = true;
    y->ensure_grad();
    if (a->requires_grad) a->ensure_grad();
    if (b->requires_grad) b->ensure_grad();
    tape->push([a, b, y] {
      for (int64_t i = 0; i < a->numel(); ++i) {
        if (a->data[i] <= b->data[i]) {
          if (a->requires_grad) a->grad[i] += y->grad[i];
        } else if (b->requires_grad) {
          b->grad[i] += y->grad[i];
        }
      }
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> neg_mean(Tape<T>* tape, const TensorPtr<T>& x) {
  const int64_t N = x->numel();
  auto y = make_tensor<T>({1});
  T acc = T(0);
  for (int64_t i = 0; i < N; ++i) acc += x->data[i];
  y->data[0] = -acc / T(N);
  if (detail::track(tape, {&x})) {
    y->requires_grad = true;
    y->ensure_grad();
    x->ensure_grad();
    tape->push([x, y, N] {
      const T g = -y->grad[0] / T(N);
      for (int64_t i = 0; i < N; ++i) x->grad[i] += g;
    });
  }
  return y;
}

template <typename T>
TensorPtr<T> add_scalars(Tape<T>* tape, const std::vector<TensorPtr<T>>& terms) {
  auto y = make_tensor<T>({1});
  bool rg = false;
  for (const auto& t : terms) {
    if (t->numel() != 1) throw ConfigError("add_scalars: all terms must be scalars");
    y->data[0] += t->data[0];
    rg = rg || t->requires_grad;
  }
  if (tape && rg) {
    y->requires_grad = true;
    y->ensure_grad();
    for (const auto& t : terms)
      if (t->requires_grad) t->ensure_grad();
    tape->push([terms, y] {
      for (const auto& t : terms)
        if (t->requires_grad) t->grad[0] += y->grad[0];
    });
  }
  return y;
}

// coef * sum((w - w0)^2), the distance-from-initialization penalty.
template <typename T>
TensorPtr<T> init_drift_penalty(Tape<T>* tape, const TensorPtr<T>& w, const Tensor<T>& w0, T coef) {
  if (w->numel() != w0.numel()) throw ContractViolation("init_drift_penalty: snapshot size mismatch");
  auto y = make_tensor<T>({1});
  T acc = T(0);
  for (int64_t i = 0; i < w->numel(); ++i) {
    const T d = w->data[i] - w0.data[i];
    acc += d * d;
  }
  y->data[0] = coef * acc;
  if (detail::track(tape, {&w})) {
    y->requires_grad = true;
    y->ensure_grad();
    w->ensure_grad();
    const std::vector<T>* w0d = &w0.data;
    tape->push([w, w0d, y, coef] {
      const T g = y->grad[0] * T(2) * coef;
      for (int64_t i = 0; i < w->numel(); ++i) w->grad[i] += g * (w->data[i] - (*w0d)[i]);
    });
  }
  return y;
}

}  // namespace vrlab
