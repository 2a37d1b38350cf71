#pragma once

// Differentiable operations on TensorNode graphs.
//
// Every op validates shapes up front, computes the forward value, and attaches
// a backprop closure when any input participates in gradients. Closures
// capture parent tensors by shared_ptr and the output node by raw pointer
// (the output owns its own closure; a shared_ptr capture would be a cycle).
//
// Convolutions are causal: output step t sees inputs at steps <= t only, with
// implicit zero padding on the left. Batch norm normalizes over rows, which
// for this model is the time axis of a single window.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "auxvae/rng.hpp"
#include "auxvae/tensor.hpp"

namespace auxvae::nn {

namespace detail {

inline void check(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument(msg);
}

template <class T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b,
                      const char* op) {
  check(a->rows == b->rows && a->cols == b->cols,
        std::string(op) + ": shape mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise and structural ops
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check_same_shape(a, b, "add");
  auto out = tensor<T>(a->rows, a->cols);
  for (int i = 0; i < a->size(); ++i) out->val[i] = a->val[i] + b->val[i];
  TensorNode<T>* o = out.get();
  attach(out, {a, b}, [o, a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int i = 0; i < o->size(); ++i) b->grad[i] += o->grad[i];
    }
  });
  return out;
}

template <class T>
Tensor<T> mul_scalar(const Tensor<T>& a, T s) {
  auto out = tensor<T>(a->rows, a->cols);
  for (int i = 0; i < a->size(); ++i) out->val[i] = a->val[i] * s;
  TensorNode<T>* o = out.get();
  attach(out, {a}, [o, a, s] {
    a->ensure_grad();
    for (int i = 0; i < o->size(); ++i) a->grad[i] += s * o->grad[i];
  });
  return out;
}

template <class T>
Tensor<T> reshape(const Tensor<T>& a, int rows, int cols) {
  detail::check(rows > 0 && cols > 0 && rows * cols == a->size(),
                "reshape: element count must be preserved");
  auto out = tensor<T>(rows, cols);
  out->val = a->val;
  TensorNode<T>* o = out.get();
  attach(out, {a}, [o, a] {
    a->ensure_grad();
    for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
  });
  return out;
}

// Keeps the first `keep` rows, dropping the tail.
template <class T>
Tensor<T> trim_rows(const Tensor<T>& a, int keep) {
  detail::check(keep > 0 && keep <= a->rows, "trim_rows: invalid row count");
  auto out = tensor<T>(keep, a->cols);
  std::copy(a->val.begin(),
            a->val.begin() + static_cast<std::size_t>(keep) * a->cols,
            out->val.begin());
  TensorNode<T>* o = out.get();
  attach(out, {a}, [o, a] {
    a->ensure_grad();
    for (int i = 0; i < o->size(); ++i) a->grad[i] += o->grad[i];
  });
  return out;
}

// Rows [r0, r1) as a new tensor; the gradient flows back into that band.
template <class T>
Tensor<T> slice_rows(const Tensor<T>& a, int r0, int r1) {
  detail::check(0 <= r0 && r0 < r1 && r1 <= a->rows,
                "slice_rows: invalid row range");
  int d = a->cols;
  auto out = tensor<T>(r1 - r0, d);
  std::copy(a->val.begin() + static_cast<std::size_t>(r0) * d,
            a->val.begin() + static_cast<std::size_t>(r1) * d,
            out->val.begin());
  TensorNode<T>* o = out.get();
  attach(out, {a}, [o, a, r0, d] {
    a->ensure_grad();
    for (int i = 0; i < o->size(); ++i)
      a->grad[static_cast<std::size_t>(r0) * d + i] += o->grad[i];
  });
  return out;
}

template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  detail::check(!parts.empty(), "concat_cols: no inputs");
  int rows = parts[0]->rows;
  int cols = 0;
  for (const auto& p : parts) {
    detail::check(p->rows == rows, "concat_cols: row mismatch");
    cols += p->cols;
  }
  auto out = tensor<T>(rows, cols);
  int off = 0;
  for (const auto& p : parts) {
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < p->cols; ++c) out->at(r, off + c) = p->at(r, c);
    off += p->cols;
  }
  TensorNode<T>* o = out.get();
  attach(out, parts, [o, parts] {
    int off2 = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (int r = 0; r < p->rows; ++r)
          for (int c = 0; c < p->cols; ++c)
            p->g(r, c) += o->grad[static_cast<std::size_t>(r) * o->cols +
                                  off2 + c];
      }
      off2 += p->cols;
    }
  });
  return out;
}

template <class T>
Tensor<T> concat_cols(const Tensor<T>& a, const Tensor<T>& b) {
  return concat_cols<T>(std::vector<Tensor<T>>{a, b});
}

template <class T>
Tensor<T> concat_rows(const std::vector<Tensor<T>>& parts) {
  detail::check(!parts.empty(), "concat_rows: no inputs");
  int cols = parts[0]->cols;
  int rows = 0;
  for (const auto& p : parts) {
    detail::check(p->cols == cols, "concat_rows: column mismatch");
    rows += p->rows;
  }
  auto out = tensor<T>(rows, cols);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p->val.begin(), p->val.end(), out->val.begin() + off);
    off += p->val.size();
  }
  TensorNode<T>* o = out.get();
  attach(out, parts, [o, parts] {
    std::size_t off2 = 0;
    for (const auto& p : parts) {
      if (p->requires_grad) {
        p->ensure_grad();
        for (std::size_t i = 0; i < p->val.size(); ++i)
          p->grad[i] += o->grad[off2 + i];
      }
      off2 += p->val.size();
    }
  });
  return out;
}

template <class T>
Tensor<T> concat_rows(const Tensor<T>& a, const Tensor<T>& b) {
  return concat_rows<T>(std::vector<Tensor<T>>{a, b});
}

template <class T>
Tensor<T> gelu(const Tensor<T>& a) {
  auto out = tensor<T>(a->rows, a->cols);
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  for (int i = 0; i < a->size(); ++i) {
    double x = static_cast<double>(a->val[i]);
    out->val[i] = static_cast<T>(0.5 * x * (1.0 + std::erf(x * inv_sqrt2)));
  }
  TensorNode<T>* o = out.get();
  attach(out, {a}, [o, a] {
    a->ensure_grad();
    constexpr double inv_sqrt2pi = 0.39894228040143267794;
    for (int i = 0; i < o->size(); ++i) {
      double x = static_cast<double>(a->val[i]);
      double cdf = 0.5 * (1.0 + std::erf(x * 0.70710678118654752440));
      double pdf = inv_sqrt2pi * std::exp(-0.5 * x * x);
      a->grad[i] += o->grad[i] * static_cast<T>(cdf + x * pdf);
    }
  });
  return out;
}

template <class T>
Tensor<T> exp_elem(const Tensor<T>& a) {
  auto out = tensor<T>(a->rows, a->cols);
  for (int i = 0; i < a->size(); ++i)
    out->val[i] = static_cast<T>(std::exp(static_cast<double>(a->val[i])));
  TensorNode<T>* o = out.get();
  attach(out, {a}, [o, a] {
    a->ensure_grad();
    for (int i = 0; i < o->size(); ++i)
      a->grad[i] += o->grad[i] * o->val[i];
  });
  return out;
}

// Gradient is passed through inside [lo, hi] and zero outside.
template <class T>
Tensor<T> clamp(const Tensor<T>& a, T lo, T hi) {
  detail::check(lo <= hi, "clamp: lo must not exceed hi");
  auto out = tensor<T>(a->rows, a->cols);
  for (int i = 0; i < a->size(); ++i)
    out->val[i] = std::min(hi, std::max(lo, a->val[i]));
  TensorNode<T>* o = out.get();
  attach(out, {a}, [o, a, lo, hi] {
    a->ensure_grad();
    for (int i = 0; i < o->size(); ++i)
      if (a->val[i] >= lo && a->val[i] <= hi) a->grad[i] += o->grad[i];
  });
  return out;
}

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check(a->cols == b->rows, "matmul: inner dimensions differ");
  auto out = tensor<T>(a->rows, b->cols);
  for (int i = 0; i < a->rows; ++i) {
    const T* arow = &a->val[static_cast<std::size_t>(i) * a->cols];
    T* orow = &out->val[static_cast<std::size_t>(i) * out->cols];
    for (int k = 0; k < a->cols; ++k) {
      T aik = arow[k];
      const T* brow = &b->val[static_cast<std::size_t>(k) * b->cols];
      for (int j = 0; j < b->cols; ++j) orow[j] += aik * brow[j];
    }
  }
  TensorNode<T>* o = out.get();
  attach(out, {a, b}, [o, a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      // dA = dY * B^T
      for (int i = 0; i < a->rows; ++i)
        for (int k = 0; k < a->cols; ++k) {
          T acc = T(0);
          const T* grow = &o->grad[static_cast<std::size_t>(i) * o->cols];
          const T* brow = &b->val[static_cast<std::size_t>(k) * b->cols];
          for (int j = 0; j < b->cols; ++j) acc += grow[j] * brow[j];
          a->g(i, k) += acc;
        }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      // dB = A^T * dY
      for (int i = 0; i < a->rows; ++i) {
        const T* arow = &a->val[static_cast<std::size_t>(i) * a->cols];
        const T* grow = &o->grad[static_cast<std::size_t>(i) * o->cols];
        for (int k = 0; k < a->cols; ++k) {
          T aik = arow[k];
          T* brow = &b->grad[static_cast<std::size_t>(k) * b->cols];
          for (int j = 0; j < b->cols; ++j) brow[j] += aik * grow[j];
        }
      }
    }
  });
  return out;
}

// a * b^T, with b given untransposed as (p x m).
template <class T>
Tensor<T> matmul_nt(const Tensor<T>& a, const Tensor<T>& b) {
  detail::check(a->cols == b->cols, "matmul_nt: inner dimensions differ");
  auto out = tensor<T>(a->rows, b->rows);
  for (int i = 0; i < a->rows; ++i) {
    const T* arow = &a->val[static_cast<std::size_t>(i) * a->cols];
    for (int j = 0; j < b->rows; ++j) {
      const T* brow = &b->val[static_cast<std::size_t>(j) * b->cols];
      T acc = T(0);
      for (int k = 0; k < a->cols; ++k) acc += arow[k] * brow[k];
      out->at(i, j) = acc;
    }
  }
  TensorNode<T>* o = out.get();
  attach(out, {a, b}, [o, a, b] {
    if (a->requires_grad) {
      a->ensure_grad();
      // dA = dY * B
      for (int i = 0; i < a->rows; ++i) {
        const T* grow = &o->grad[static_cast<std::size_t>(i) * o->cols];
        T* arow = &a->grad[static_cast<std::size_t>(i) * a->cols];
        for (int j = 0; j < b->rows; ++j) {
          T gij = grow[j];
          const T* brow = &b->val[static_cast<std::size_t>(j) * b->cols];
          for (int k = 0; k < a->cols; ++k) arow[k] += gij * brow[k];
        }
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      // dB = dY^T * A
      for (int i = 0; i < a->rows; ++i) {
        const T* grow = &o->grad[static_cast<std::size_t>(i) * o->cols];
        const T* arow = &a->val[static_cast<std::size_t>(i) * a->cols];
        for (int j = 0; j < b->rows; ++j) {
          T gij = grow[j];
          T* brow = &b->grad[static_cast<std::size_t>(j) * b->cols];
          for (int k = 0; k < a->cols; ++k) brow[k] += gij * arow[k];
        }
      }
    }
  });
  return out;
}

// x (n x in) * W (in x out) + b (1 x out), bias broadcast over rows.
template <class T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  detail::check(x->cols == w->rows, "dense: input width != weight rows");
  detail::check(b->rows == 1 && b->cols == w->cols,
                "dense: bias shape must be (1 x out)");
  auto out = tensor<T>(x->rows, w->cols);
  for (int i = 0; i < x->rows; ++i) {
    T* orow = &out->val[static_cast<std::size_t>(i) * out->cols];
    for (int j = 0; j < w->cols; ++j) orow[j] = b->val[j];
    const T* xrow = &x->val[static_cast<std::size_t>(i) * x->cols];
    for (int k = 0; k < x->cols; ++k) {
      T xik = xrow[k];
      const T* wrow = &w->val[static_cast<std::size_t>(k) * w->cols];
      for (int j = 0; j < w->cols; ++j) orow[j] += xik * wrow[j];
    }
  }
  TensorNode<T>* o = out.get();
  attach(out, {x, w, b}, [o, x, w, b] {
    if (x->requires_grad) {
      x->ensure_grad();
      for (int i = 0; i < x->rows; ++i)
        for (int k = 0; k < x->cols; ++k) {
          T acc = T(0);
          const T* grow = &o->grad[static_cast<std::size_t>(i) * o->cols];
          const T* wrow = &w->val[static_cast<std::size_t>(k) * w->cols];
          for (int j = 0; j < w->cols; ++j) acc += grow[j] * wrow[j];
          x->g(i, k) += acc;
        }
    }
    if (w->requires_grad) {
      w->ensure_grad();
      for (int i = 0; i < x->rows; ++i) {
        const T* xrow = &x->val[static_cast<std::size_t>(i) * x->cols];
        const T* grow = &o->grad[static_cast<std::size_t>(i) * o->cols];
        for (int k = 0; k < x->cols; ++k) {
          T xik = xrow[k];
          T* wrow = &w->grad[static_cast<std::size_t>(k) * w->cols];
          for (int j = 0; j < w->cols; ++j) wrow[j] += xik * grow[j];
        }
      }
    }
    if (b->requires_grad) {
      b->ensure_grad();
      for (int i = 0; i < o->rows; ++i) {
        const T* grow = &o->grad[static_cast<std::size_t>(i) * o->cols];
        for (int j = 0; j < o->cols; ++j) b->grad[j] += grow[j];
      }
    }
  });
  return out;
}

// Numerically stable row-wise softmax.
template <class T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
  auto out = tensor<T>(x->rows, x->cols);
  for (int i = 0; i < x->rows; ++i) {
    T mx = x->at(i, 0);
    for (int j = 1; j < x->cols; ++j) mx = std::max(mx, x->at(i, j));
    double denom = 0.0;
    for (int j = 0; j < x->cols; ++j) {
      double e = std::exp(static_cast<double>(x->at(i, j) - mx));
      out->at(i, j) = static_cast<T>(e);
      denom += e;
    }
    for (int j = 0; j < x->cols; ++j)
      out->at(i, j) = static_cast<T>(static_cast<double>(out->at(i, j)) / denom);
  }
  TensorNode<T>* o = out.get();
  attach(out, {x}, [o, x] {
    x->ensure_grad();
    for (int i = 0; i < o->rows; ++i) {
      T dot = T(0);
      for (int j = 0; j < o->cols; ++j) dot += o->g(i, j) * o->at(i, j);
      for (int j = 0; j < o->cols; ++j)
        x->g(i, j) += o->at(i, j) * (o->g(i, j) - dot);
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Temporal ops
// ---------------------------------------------------------------------------

// Causal dilated 1-D convolution. h is (T x in_ch); the kernel is stored as
// (K*out_ch x in_ch) with row k*out_ch + s holding tap k of output channel s;
// b is (1 x out_ch). Output is (T x out_ch):
//   out[t, s] = b[s] + sum_k sum_c W[k, s, c] * h[t - k*dilation, c]
// with out-of-range taps reading zero (left padding).
template <class T>
Tensor<T> conv1d_causal(const Tensor<T>& h, const Tensor<T>& w,
                        const Tensor<T>& b, int dilation) {
  detail::check(dilation >= 1, "conv1d_causal: dilation must be >= 1");
  detail::check(b->rows == 1 && b->cols >= 1,
                "conv1d_causal: bias shape must be (1 x out_ch)");
  int out_ch = b->cols;
  detail::check(w->rows % out_ch == 0 && w->cols == h->cols,
                "conv1d_causal: kernel shape inconsistent with bias/input");
  int ksize = w->rows / out_ch;
  int tlen = h->rows;
  int in_ch = h->cols;
  auto out = tensor<T>(tlen, out_ch);
  for (int t = 0; t < tlen; ++t) {
    T* orow = &out->val[static_cast<std::size_t>(t) * out_ch];
    for (int s = 0; s < out_ch; ++s) orow[s] = b->val[s];
    for (int k = 0; k < ksize; ++k) {
      int src = t - k * dilation;
      if (src < 0) continue;
      const T* hrow = &h->val[static_cast<std::size_t>(src) * in_ch];
      for (int s = 0; s < out_ch; ++s) {
        const T* wrow = &w->val[static_cast<std::size_t>(k * out_ch + s) * in_ch];
        T acc = T(0);
        for (int c = 0; c < in_ch; ++c) acc += wrow[c] * hrow[c];
        orow[s] += acc;
      }
    }
  }
  TensorNode<T>* o = out.get();
  attach(out, {h, w, b}, [o, h, w, b, ksize, dilation] {
    int out_ch = b->cols;
    int tlen = h->rows;
    int in_ch = h->cols;
    for (int t = 0; t < tlen; ++t) {
      const T* grow = &o->grad[static_cast<std::size_t>(t) * out_ch];
      if (b->requires_grad) {
        b->ensure_grad();
        for (int s = 0; s < out_ch; ++s) b->grad[s] += grow[s];
      }
      for (int k = 0; k < ksize; ++k) {
        int src = t - k * dilation;
        if (src < 0) continue;
        const T* hrow = &h->val[static_cast<std::size_t>(src) * in_ch];
        for (int s = 0; s < out_ch; ++s) {
          T gts = grow[s];
          if (gts == T(0)) continue;
          std::size_t woff = static_cast<std::size_t>(k * out_ch + s) * in_ch;
          if (w->requires_grad) {
            w->ensure_grad();
            for (int c = 0; c < in_ch; ++c) w->grad[woff + c] += gts * hrow[c];
          }
          if (h->requires_grad) {
            h->ensure_grad();
            const T* wrow = &w->val[woff];
            T* hg = &h->grad[static_cast<std::size_t>(src) * in_ch];
            for (int c = 0; c < in_ch; ++c) hg[c] += gts * wrow[c];
          }
        }
      }
    }
  });
  return out;
}

// Transposed causal convolution used for temporal upsampling. Equivalent to
// inserting (stride - 1) zeros between consecutive input steps and applying
// conv1d_causal with dilation 1. Kernel layout matches conv1d_causal.
// Output is (T*stride x out_ch).
template <class T>
Tensor<T> conv1d_transposed(const Tensor<T>& h, const Tensor<T>& w,
                            const Tensor<T>& b, int stride) {
  detail::check(stride >= 1, "conv1d_transposed: stride must be >= 1");
  detail::check(b->rows == 1 && b->cols >= 1,
                "conv1d_transposed: bias shape must be (1 x out_ch)");
  int out_ch = b->cols;
  detail::check(w->rows % out_ch == 0 && w->cols == h->cols,
                "conv1d_transposed: kernel shape inconsistent with bias/input");
  int ksize = w->rows / out_ch;
  int in_len = h->rows;
  int in_ch = h->cols;
  int out_len = in_len * stride;
  auto out = tensor<T>(out_len, out_ch);
  for (int t = 0; t < out_len; ++t) {
    T* orow = &out->val[static_cast<std::size_t>(t) * out_ch];
    for (int s = 0; s < out_ch; ++s) orow[s] = b->val[s];
    for (int k = 0; k < ksize; ++k) {
      int up = t - k;
      if (up < 0 || up % stride != 0) continue;
      const T* hrow = &h->val[static_cast<std::size_t>(up / stride) * in_ch];
      for (int s = 0; s < out_ch; ++s) {
        const T* wrow = &w->val[static_cast<std::size_t>(k * out_ch + s) * in_ch];
        T acc = T(0);
        for (int c = 0; c < in_ch; ++c) acc += wrow[c] * hrow[c];
        orow[s] += acc;
      }
    }
  }
  TensorNode<T>* o = out.get();
  attach(out, {h, w, b}, [o, h, w, b, ksize, stride] {
    int out_ch = b->cols;
    int in_ch = h->cols;
    int out_len = o->rows;
    for (int t = 0; t < out_len; ++t) {
      const T* grow = &o->grad[static_cast<std::size_t>(t) * out_ch];
      if (b->requires_grad) {
        b->ensure_grad();
        for (int s = 0; s < out_ch; ++s) b->grad[s] += grow[s];
      }
      for (int k = 0; k < ksize; ++k) {
        int up = t - k;
        if (up < 0 || up % stride != 0) continue;
        int src = up / stride;
        const T* hrow = &h->val[static_cast<std::size_t>(src) * in_ch];
        for (int s = 0; s < out_ch; ++s) {
          T gts = grow[s];
          if (gts == T(0)) continue;
          std::size_t woff = static_cast<std::size_t>(k * out_ch + s) * in_ch;
          if (w->requires_grad) {
            w->ensure_grad();
            for (int c = 0; c < in_ch; ++c) w->grad[woff + c] += gts * hrow[c];
          }
          if (h->requires_grad) {
            h->ensure_grad();
            const T* wrow = &w->val[woff];
            T* hg = &h->grad[static_cast<std::size_t>(src) * in_ch];
            for (int c = 0; c < in_ch; ++c) hg[c] += gts * wrow[c];
          }
        }
      }
    }
  });
  return out;
}

// Batch normalization over rows (the time axis of a window). In training mode
// the batch mean and population variance (1/n) normalize the input and the
// running buffers are updated in place:
//   running = (1 - momentum) * running + momentum * batch_stat
// In eval mode the running buffers normalize and nothing is mutated.
// running_mean / running_var are plain value holders outside the graph.
template <class T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma,
                     const Tensor<T>& beta, const Tensor<T>& running_mean,
                     const Tensor<T>& running_var, bool train,
                     T momentum = T(0.1), T eps = T(1e-5)) {
  int n = x->rows, d = x->cols;
  detail::check(gamma->rows == 1 && gamma->cols == d &&
                    beta->rows == 1 && beta->cols == d &&
                    running_mean->cols == d && running_var->cols == d,
                "batch_norm: parameter shapes must be (1 x d)");
  auto out = tensor<T>(n, d);
  auto mean = std::make_shared<std::vector<T>>(d, T(0));
  auto inv_std = std::make_shared<std::vector<T>>(d, T(0));
  auto xhat = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n) * d);

  if (train) {
    detail::check(n >= 2, "batch_norm: training mode needs at least 2 rows");
    for (int j = 0; j < d; ++j) {
      double mu = 0.0;
      for (int i = 0; i < n; ++i) mu += static_cast<double>(x->at(i, j));
      mu /= n;
      double var = 0.0;
      for (int i = 0; i < n; ++i) {
        double diff = static_cast<double>(x->at(i, j)) - mu;
        var += diff * diff;
      }
      var /= n;
      (*mean)[j] = static_cast<T>(mu);
      (*inv_std)[j] = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
      running_mean->val[j] = (T(1) - momentum) * running_mean->val[j] +
                             momentum * static_cast<T>(mu);
      running_var->val[j] = (T(1) - momentum) * running_var->val[j] +
                            momentum * static_cast<T>(var);
    }
  } else {
    for (int j = 0; j < d; ++j) {
      (*mean)[j] = running_mean->val[j];
      (*inv_std)[j] = static_cast<T>(
          1.0 / std::sqrt(static_cast<double>(running_var->val[j]) +
                          static_cast<double>(eps)));
    }
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) {
      T xh = (x->at(i, j) - (*mean)[j]) * (*inv_std)[j];
      (*xhat)[static_cast<std::size_t>(i) * d + j] = xh;
      out->at(i, j) = gamma->val[j] * xh + beta->val[j];
    }

  TensorNode<T>* o = out.get();
  attach(out, {x, gamma, beta}, [o, x, gamma, beta, inv_std, xhat, train] {
    int n2 = o->rows, d2 = o->cols;
    if (gamma->requires_grad) {
      gamma->ensure_grad();
      for (int i = 0; i < n2; ++i)
        for (int j = 0; j < d2; ++j)
          gamma->grad[j] += o->g(i, j) * (*xhat)[static_cast<std::size_t>(i) * d2 + j];
    }
    if (beta->requires_grad) {
      beta->ensure_grad();
      for (int i = 0; i < n2; ++i)
        for (int j = 0; j < d2; ++j) beta->grad[j] += o->g(i, j);
    }
    if (!x->requires_grad) return;
    x->ensure_grad();
    if (train) {
      // Batch statistics depend on x, so the gradient couples all rows:
      // dx = gamma*inv_std * (dy - mean(dy) - xhat * mean(dy*xhat))
      for (int j = 0; j < d2; ++j) {
        T sum_dy = T(0), sum_dy_xhat = T(0);
        for (int i = 0; i < n2; ++i) {
          T dy = o->g(i, j);
          sum_dy += dy;
          sum_dy_xhat += dy * (*xhat)[static_cast<std::size_t>(i) * d2 + j];
        }
        T m_dy = sum_dy / T(n2);
        T m_dy_xhat = sum_dy_xhat / T(n2);
        T scale = gamma->val[j] * (*inv_std)[j];
        for (int i = 0; i < n2; ++i) {
          T xh = (*xhat)[static_cast<std::size_t>(i) * d2 + j];
          x->g(i, j) += scale * (o->g(i, j) - m_dy - xh * m_dy_xhat);
        }
      }
    } else {
      for (int i = 0; i < n2; ++i)
        for (int j = 0; j < d2; ++j)
          x->g(i, j) += o->g(i, j) * gamma->val[j] * (*inv_std)[j];
    }
  });
  return out;
}

// Non-overlapping temporal max pooling; a ragged final window is allowed.
// Output has ceil(T / window) rows. Gradient flows to the first maximal
// element of each window.
template <class T>
Tensor<T> max_pool1d(const Tensor<T>& h, int window) {
  detail::check(window >= 1, "max_pool1d: window must be >= 1");
  int tlen = h->rows, d = h->cols;
  int out_len = (tlen + window - 1) / window;
  auto out = tensor<T>(out_len, d);
  auto argmax = std::make_shared<std::vector<int>>(
      static_cast<std::size_t>(out_len) * d);
  for (int i = 0; i < out_len; ++i) {
    int t0 = i * window;
    int t1 = std::min(tlen, t0 + window);
    for (int j = 0; j < d; ++j) {
      T best = h->at(t0, j);
      int bi = t0;
      for (int t = t0 + 1; t < t1; ++t)
        if (h->at(t, j) > best) {
          best = h->at(t, j);
          bi = t;
        }
      out->at(i, j) = best;
      (*argmax)[static_cast<std::size_t>(i) * d + j] = bi;
    }
  }
  TensorNode<T>* o = out.get();
  attach(out, {h}, [o, h, argmax] {
    h->ensure_grad();
    int d2 = o->cols;
    for (int i = 0; i < o->rows; ++i)
      for (int j = 0; j < d2; ++j)
        h->g((*argmax)[static_cast<std::size_t>(i) * d2 + j], j) += o->g(i, j);
  });
  return out;
}

// Collapses the whole time axis to one row.
template <class T>
Tensor<T> max_over_time(const Tensor<T>& h) {
  return max_pool1d(h, h->rows);
}

// ---------------------------------------------------------------------------
// Probabilistic ops
// ---------------------------------------------------------------------------

// KL( N(mu, diag(sigma^2)) || N(0, I) ), mu and sigma row vectors. Scalar out.
template <class T>
Tensor<T> gaussian_kl(const Tensor<T>& mu, const Tensor<T>& sigma) {
  detail::check_same_shape(mu, sigma, "gaussian_kl");
  detail::check(mu->rows == 1, "gaussian_kl: expects row vectors");
  for (int i = 0; i < sigma->size(); ++i)
    detail::check(sigma->val[i] > T(0), "gaussian_kl: sigma must be positive");
  double acc = 0.0;
  for (int i = 0; i < mu->size(); ++i) {
    double m = static_cast<double>(mu->val[i]);
    double s = static_cast<double>(sigma->val[i]);
    acc += 0.5 * (m * m + s * s - 1.0) - std::log(s);
  }
  auto out = scalar_tensor<T>(static_cast<T>(acc));
  TensorNode<T>* o = out.get();
  attach(out, {mu, sigma}, [o, mu, sigma] {
    T g = o->grad[0];
    if (mu->requires_grad) {
      mu->ensure_grad();
      for (int i = 0; i < mu->size(); ++i) mu->grad[i] += g * mu->val[i];
    }
    if (sigma->requires_grad) {
      sigma->ensure_grad();
      for (int i = 0; i < sigma->size(); ++i)
        sigma->grad[i] += g * (sigma->val[i] - T(1) / sigma->val[i]);
    }
  });
  return out;
}

// z = mu + sigma * eps with eps ~ N(0, I) drawn from rng. The noise is a
// constant of the graph: gradients flow to mu and sigma only.
template <class T>
Tensor<T> reparameterize(const Tensor<T>& mu, const Tensor<T>& sigma,
                         Rng& rng) {
  detail::check_same_shape(mu, sigma, "reparameterize");
  auto eps = std::make_shared<std::vector<T>>(mu->val.size());
  for (auto& e : *eps) e = static_cast<T>(rng.normal());
  auto out = tensor<T>(mu->rows, mu->cols);
  for (int i = 0; i < mu->size(); ++i)
    out->val[i] = mu->val[i] + sigma->val[i] * (*eps)[i];
  TensorNode<T>* o = out.get();
  attach(out, {mu, sigma}, [o, mu, sigma, eps] {
    if (mu->requires_grad) {
      mu->ensure_grad();
      for (int i = 0; i < o->size(); ++i) mu->grad[i] += o->grad[i];
    }
    if (sigma->requires_grad) {
      sigma->ensure_grad();
      for (int i = 0; i < o->size(); ++i)
        sigma->grad[i] += o->grad[i] * (*eps)[i];
    }
  });
  return out;
}

// ---------------------------------------------------------------------------
// Losses (scalar outputs, averaged over all elements / rows)
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  detail::check_same_shape(pred, target, "mse_loss");
  double acc = 0.0;
  for (int i = 0; i < pred->size(); ++i) {
    double diff = static_cast<double>(pred->val[i]) -
                  static_cast<double>(target->val[i]);
    acc += diff * diff;
  }
  int n = pred->size();
  auto out = scalar_tensor<T>(static_cast<T>(acc / n));
  TensorNode<T>* o = out.get();
  attach(out, {pred, target}, [o, pred, target, n] {
    T g = o->grad[0];
    for (int i = 0; i < pred->size(); ++i) {
      T diff = pred->val[i] - target->val[i];
      T d = g * T(2) * diff / T(n);
      if (pred->requires_grad) {
        pred->ensure_grad();
        pred->grad[i] += d;
      }
      if (target->requires_grad) {
        target->ensure_grad();
        target->grad[i] -= d;
      }
    }
  });
  return out;
}

template <class T>
Tensor<T> mae_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  detail::check_same_shape(pred, target, "mae_loss");
  double acc = 0.0;
  for (int i = 0; i < pred->size(); ++i)
    acc += std::abs(static_cast<double>(pred->val[i]) -
                    static_cast<double>(target->val[i]));
  int n = pred->size();
  auto out = scalar_tensor<T>(static_cast<T>(acc / n));
  TensorNode<T>* o = out.get();
  attach(out, {pred, target}, [o, pred, target, n] {
    T g = o->grad[0];
    for (int i = 0; i < pred->size(); ++i) {
      T diff = pred->val[i] - target->val[i];
      // Subgradient 0 at the kink.
      T s = diff > T(0) ? T(1) : (diff < T(0) ? T(-1) : T(0));
      T d = g * s / T(n);
      if (pred->requires_grad) {
        pred->ensure_grad();
        pred->grad[i] += d;
      }
      if (target->requires_grad) {
        target->ensure_grad();
        target->grad[i] -= d;
      }
    }
  });
  return out;
}

// Expects probabilities (already softmax-normalized), not logits. Each row of
// probs must be strictly positive and sum to 1; target rows are one-hot.
// Returns the mean over rows of -sum_l target * log(probs).
template <class T>
Tensor<T> cross_entropy_loss(const Tensor<T>& probs, const Tensor<T>& target) {
  detail::check_same_shape(probs, target, "cross_entropy_loss");
  int n = probs->rows, d = probs->cols;
  for (int i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (int j = 0; j < d; ++j) {
      detail::check(probs->at(i, j) > T(0),
                    "cross_entropy_loss: probabilities must be strictly positive");
      row_sum += static_cast<double>(probs->at(i, j));
    }
    detail::check(std::abs(row_sum - 1.0) <= 1e-4,
                  "cross_entropy_loss: probability rows must sum to 1");
  }
  double acc = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j)
      if (target->at(i, j) != T(0))
        acc -= static_cast<double>(target->at(i, j)) *
               std::log(static_cast<double>(probs->at(i, j)));
  auto out = scalar_tensor<T>(static_cast<T>(acc / n));
  TensorNode<T>* o = out.get();
  attach(out, {probs, target}, [o, probs, target, n] {
    if (!probs->requires_grad) return;
    probs->ensure_grad();
    T g = o->grad[0];
    for (int i = 0; i < probs->size(); ++i)
      if (target->val[i] != T(0))
        probs->grad[i] -= g * target->val[i] / probs->val[i] / T(n);
  });
  return out;
}

// Cross entropy straight from logits: mean over rows of
// logsumexp(logits) - sum_l target * logits. Equivalent to softmax followed
// by cross_entropy_loss but stays finite when the softmax saturates, since
// log(p) never materializes. Target rows must sum to 1. The logit gradient
// is (softmax(logits) - target) / rows.
template <class T>
Tensor<T> cross_entropy_with_logits(const Tensor<T>& logits,
                                    const Tensor<T>& target) {
  detail::check_same_shape(logits, target, "cross_entropy_with_logits");
  int n = logits->rows, d = logits->cols;
  std::vector<T> probs(static_cast<std::size_t>(n) * d);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    double trow = 0.0;
    for (int j = 0; j < d; ++j) trow += static_cast<double>(target->at(i, j));
    detail::check(std::abs(trow - 1.0) <= 1e-4,
                  "cross_entropy_with_logits: target rows must sum to 1");
    T mx = logits->at(i, 0);
    for (int j = 1; j < d; ++j) mx = std::max(mx, logits->at(i, j));
    double denom = 0.0;
    for (int j = 0; j < d; ++j)
      denom += std::exp(static_cast<double>(logits->at(i, j) - mx));
    double lse = static_cast<double>(mx) + std::log(denom);
    for (int j = 0; j < d; ++j) {
      probs[static_cast<std::size_t>(i) * d + j] = static_cast<T>(
          std::exp(static_cast<double>(logits->at(i, j) - mx)) / denom);
      acc += static_cast<double>(target->at(i, j)) *
             (lse - static_cast<double>(logits->at(i, j)));
    }
  }
  auto out = scalar_tensor<T>(static_cast<T>(acc / n));
  TensorNode<T>* o = out.get();
  attach(out, {logits, target},
         [o, logits, target, n, d, probs = std::move(probs)] {
           if (!logits->requires_grad) return;
           logits->ensure_grad();
           T g = o->grad[0] / T(n);
           for (int i = 0; i < n; ++i)
             for (int j = 0; j < d; ++j)
               logits->g(i, j) +=
                   g * (probs[static_cast<std::size_t>(i) * d + j] -
                        target->at(i, j));
         });
  return out;
}

}  // namespace auxvae::nn
