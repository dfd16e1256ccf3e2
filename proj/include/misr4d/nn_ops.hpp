#ifndef MISR4D_NN_OPS_HPP
#define MISR4D_NN_OPS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "misr4d/gemm.hpp"
#include "misr4d/tensor.hpp"

namespace misr4d {

template <typename T>
void im2col(const T* x, int c, int h, int w, int k, int pad, T* col) {
  const int oh = h + 2 * pad - k + 1, ow = w + 2 * pad - k + 1;
  size_t idx = 0;
  for (int ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        for (int oi = 0; oi < oh; ++oi) {
          const int ii = oi + ki - pad;
          if (ii < 0 || ii >= h) {
            for (int oj = 0; oj < ow; ++oj) col[idx++] = T(0);
            continue;
          }
          const T* row = x + (static_cast<size_t>(ci) * h + ii) * w;
          for (int oj = 0; oj < ow; ++oj) {
            const int jj = oj + kj - pad;
            col[idx++] = (jj >= 0 && jj < w) ? row[jj] : T(0);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im(const T* col, int c, int h, int w, int k, int pad, T* x) {
  const int oh = h + 2 * pad - k + 1, ow = w + 2 * pad - k + 1;
  std::fill(x, x + static_cast<size_t>(c) * h * w, T(0));
  size_t idx = 0;
  for (int ci = 0; ci < c; ++ci) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        for (int oi = 0; oi < oh; ++oi) {
          const int ii = oi + ki - pad;
          if (ii < 0 || ii >= h) {
            idx += ow;
            continue;
          }
          T* row = x + (static_cast<size_t>(ci) * h + ii) * w;
          for (int oj = 0; oj < ow; ++oj) {
            const int jj = oj + kj - pad;
            if (jj >= 0 && jj < w) row[jj] += col[idx];
            ++idx;
          }
        }
      }
    }
  }
}

/// 2-D convolution, stride 1. Weight layout (out_c, in_c * k * k).
template <typename T>
struct Conv2d {
  int in_c = 0, out_c = 0, ksize = 3, pad = 1;
  bool has_bias = false;
  std::vector<T> weight, bias;
  std::vector<T> gweight, gbias;
  Tensor<T> x_;

  void init_shape(int in, int out, int k, bool with_bias) {
    in_c = in;
    out_c = out;
    ksize = k;
    pad = k / 2;
    has_bias = with_bias;
    weight.assign(static_cast<size_t>(out_c) * in_c * k * k, T(0));
    gweight.assign(weight.size(), T(0));
    bias.assign(has_bias ? out_c : 0, T(0));
    gbias.assign(bias.size(), T(0));
  }

  Tensor<T> forward(const Tensor<T>& x, bool keep) {
    if (x.c != in_c) throw config_error("conv: channel mismatch");
    const int oh = x.h + 2 * pad - ksize + 1, ow = x.w + 2 * pad - ksize + 1;
    Tensor<T> y(x.n, out_c, oh, ow);
    const int kk = in_c * ksize * ksize;
    std::vector<T> col(static_cast<size_t>(kk) * oh * ow);
    for (int in = 0; in < x.n; ++in) {
      im2col(x.ptr(in, 0), in_c, x.h, x.w, ksize, pad, col.data());
      gemm(false, false, out_c, oh * ow, kk, T(1), weight.data(), kk, col.data(), oh * ow, T(0),
           y.ptr(in, 0), oh * ow);
      if (has_bias) {
        for (int oc = 0; oc < out_c; ++oc) {
          T* p = y.ptr(in, oc);
          const T b = bias[oc];
          for (size_t i = 0; i < y.plane(); ++i) p[i] += b;
        }
      }
    }
    if (keep) x_ = x;
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    const int oh = dy.h, ow = dy.w;
    const int kk = in_c * ksize * ksize;
    Tensor<T> dx(x_.n, in_c, x_.h, x_.w);
    std::vector<T> col(static_cast<size_t>(kk) * oh * ow);
    std::vector<T> dcol(col.size());
    for (int in = 0; in < x_.n; ++in) {
      im2col(x_.ptr(in, 0), in_c, x_.h, x_.w, ksize, pad, col.data());
      // dW += dY * col^T
      gemm(false, true, out_c, kk, oh * ow, T(1), dy.ptr(in, 0), oh * ow, col.data(), oh * ow,
           T(1), gweight.data(), kk);
      // dcol = W^T * dY
      gemm(true, false, kk, oh * ow, out_c, T(1), weight.data(), kk, dy.ptr(in, 0), oh * ow,
           T(0), dcol.data(), oh * ow);
      col2im(dcol.data(), in_c, x_.h, x_.w, ksize, pad, dx.ptr(in, 0));
      if (has_bias) {
        for (int oc = 0; oc < out_c; ++oc) {
          const T* p = dy.ptr(in, oc);
          T s = T(0);
          for (size_t i = 0; i < dy.plane(); ++i) s += p[i];
          gbias[oc] += s;
        }
      }
    }
    return dx;
  }
};

/// Batch normalization over (N, H, W) per channel, with running statistics
/// for inference.
template <typename T>
struct BatchNorm2d {
  int c = 0;
  T eps = T(1e-5);
  T momentum = T(0.1);
  std::vector<T> scale, shift, running_mean, running_var;
  std::vector<T> gscale, gshift;
  Tensor<T> xhat_;
  std::vector<T> invstd_;
  bool train_cached_ = false;

  void init_shape(int channels) {
    c = channels;
    scale.assign(c, T(1));
    shift.assign(c, T(0));
    running_mean.assign(c, T(0));
    running_var.assign(c, T(1));
    gscale.assign(c, T(0));
    gshift.assign(c, T(0));
  }

  Tensor<T> forward(const Tensor<T>& x, bool train, bool update_running, bool keep) {
    if (x.c != c) throw config_error("batchnorm: channel mismatch");
    Tensor<T> y(x.n, x.c, x.h, x.w);
    const size_t plane = x.plane();
    const size_t m = static_cast<size_t>(x.n) * plane;
    if (keep) {
      xhat_ = Tensor<T>(x.n, x.c, x.h, x.w);
      invstd_.assign(c, T(0));
      train_cached_ = train;
    }
    for (int ci = 0; ci < c; ++ci) {
      T mean, var;
      if (train) {
        double s = 0, s2 = 0;
        for (int in = 0; in < x.n; ++in) {
          const T* p = x.ptr(in, ci);
          for (size_t i = 0; i < plane; ++i) {
            s += p[i];
            s2 += double(p[i]) * p[i];
          }
        }
        mean = static_cast<T>(s / m);
        var = static_cast<T>(std::max(0.0, s2 / m - (s / m) * (s / m)));
        if (update_running) {
          const T uvar = (m > 1) ? static_cast<T>(var * (double(m) / (m - 1))) : var;
          running_mean[ci] = (T(1) - momentum) * running_mean[ci] + momentum * mean;
          running_var[ci] = (T(1) - momentum) * running_var[ci] + momentum * uvar;
        }
      } else {
        mean = running_mean[ci];
        var = running_var[ci];
      }
      const T invstd = T(1) / std::sqrt(var + eps);
      if (keep) invstd_[ci] = invstd;
      for (int in = 0; in < x.n; ++in) {
        const T* p = x.ptr(in, ci);
        T* q = y.ptr(in, ci);
        T* xh = keep ? xhat_.ptr(in, ci) : nullptr;
        for (size_t i = 0; i < plane; ++i) {
          const T h = (p[i] - mean) * invstd;
          if (xh) xh[i] = h;
          q[i] = scale[ci] * h + shift[ci];
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n, dy.c, dy.h, dy.w);
    const size_t plane = dy.plane();
    const double m = static_cast<double>(dy.n) * plane;
    for (int ci = 0; ci < c; ++ci) {
      double sum_dy = 0, sum_dy_xhat = 0;
      for (int in = 0; in < dy.n; ++in) {
        const T* d = dy.ptr(in, ci);
        const T* xh = xhat_.ptr(in, ci);
        for (size_t i = 0; i < plane; ++i) {
          sum_dy += d[i];
          sum_dy_xhat += double(d[i]) * xh[i];
        }
      }
      gshift[ci] += static_cast<T>(sum_dy);
      gscale[ci] += static_cast<T>(sum_dy_xhat);
      const T g = scale[ci], istd = invstd_[ci];
      for (int in = 0; in < dy.n; ++in) {
        const T* d = dy.ptr(in, ci);
        const T* xh = xhat_.ptr(in, ci);
        T* o = dx.ptr(in, ci);
        if (train_cached_) {
          for (size_t i = 0; i < plane; ++i)
            o[i] = static_cast<T>(g * istd * (d[i] - sum_dy / m - xh[i] * sum_dy_xhat / m));
        } else {
          for (size_t i = 0; i < plane; ++i) o[i] = g * istd * d[i];
        }
      }
    }
    return dx;
  }
};

template <typename T>
struct ReLU {
  Tensor<T> x_;
  Tensor<T> forward(const Tensor<T>& x, bool keep) {
    Tensor<T> y = x;
    for (auto& v : y.v) v = std::max(T(0), v);
    if (keep) x_ = x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i)
      if (x_.v[i] <= T(0)) dx.v[i] = T(0);
    return dx;
  }
};

/// Channel-shared PReLU with one learnable slope.
template <typename T>
struct PReLU {
  std::vector<T> slope{T(0.25)};
  std::vector<T> gslope{T(0)};
  Tensor<T> x_;

  Tensor<T> forward(const Tensor<T>& x, bool keep) {
    Tensor<T> y = x;
    const T a = slope[0];
    for (auto& v : y.v)
      if (v < T(0)) v *= a;
    if (keep) x_ = x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    const T a = slope[0];
    T ga = T(0);
    for (size_t i = 0; i < dx.v.size(); ++i) {
      if (x_.v[i] < T(0)) {
        ga += dy.v[i] * x_.v[i];
        dx.v[i] = dy.v[i] * a;
      }
    }
    gslope[0] += ga;
    return dx;
  }
};

template <typename T>
struct MaxPool2 {
  std::vector<size_t> argmax_;
  int in_h = 0, in_w = 0;

  Tensor<T> forward(const Tensor<T>& x, bool keep) {
    if (x.h % 2 || x.w % 2) throw config_error("max-pool: odd spatial dims");
    Tensor<T> y(x.n, x.c, x.h / 2, x.w / 2);
    if (keep) {
      argmax_.assign(y.size(), 0);
      in_h = x.h;
      in_w = x.w;
    }
    size_t oi = 0;
    for (int in = 0; in < x.n; ++in) {
      for (int ci = 0; ci < x.c; ++ci) {
        const T* p = x.ptr(in, ci);
        T* q = y.ptr(in, ci);
        for (int i = 0; i < y.h; ++i) {
          for (int j = 0; j < y.w; ++j) {
            size_t best = (static_cast<size_t>(2 * i) * x.w) + 2 * j;
            T bv = p[best];
            for (int di = 0; di < 2; ++di)
              for (int dj = 0; dj < 2; ++dj) {
                const size_t idx = (static_cast<size_t>(2 * i + di) * x.w) + 2 * j + dj;
                if (p[idx] > bv) {
                  bv = p[idx];
                  best = idx;
                }
              }
            q[static_cast<size_t>(i) * y.w + j] = bv;
            if (keep) argmax_[oi] = best;
            ++oi;
          }
        }
      }
    }
    return y;
  }

  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n, dy.c, in_h, in_w);
    size_t oi = 0;
    for (int in = 0; in < dy.n; ++in)
      for (int ci = 0; ci < dy.c; ++ci) {
        T* o = dx.ptr(in, ci);
        const T* d = dy.ptr(in, ci);
        for (size_t i = 0; i < dy.plane(); ++i) o[argmax_[oi++]] += d[i];
      }
    return dx;
  }
};

template <typename T>
struct UpsampleNearest2 {
  Tensor<T> forward(const Tensor<T>& x) {
    Tensor<T> y(x.n, x.c, x.h * 2, x.w * 2);
    for (int in = 0; in < x.n; ++in)
      for (int ci = 0; ci < x.c; ++ci) {
        const T* p = x.ptr(in, ci);
        T* q = y.ptr(in, ci);
        for (int i = 0; i < y.h; ++i)
          for (int j = 0; j < y.w; ++j)
            q[static_cast<size_t>(i) * y.w + j] = p[static_cast<size_t>(i / 2) * x.w + j / 2];
      }
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx(dy.n, dy.c, dy.h / 2, dy.w / 2);
    for (int in = 0; in < dy.n; ++in)
      for (int ci = 0; ci < dy.c; ++ci) {
        const T* d = dy.ptr(in, ci);
        T* o = dx.ptr(in, ci);
        for (int i = 0; i < dy.h; ++i)
          for (int j = 0; j < dy.w; ++j)
            o[static_cast<size_t>(i / 2) * dx.w + j / 2] += d[static_cast<size_t>(i) * dy.w + j];
      }
    return dx;
  }
};

template <typename T>
struct Sigmoid {
  Tensor<T> y_;
  Tensor<T> forward(const Tensor<T>& x, bool keep) {
    Tensor<T> y = x;
    for (auto& v : y.v) v = T(1) / (T(1) + std::exp(-v));
    if (keep) y_ = y;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& dy) {
    Tensor<T> dx = dy;
    for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] *= y_.v[i] * (T(1) - y_.v[i]);
    return dx;
  }
};

/// (N, r^2, H, W) -> (N, 1, rH, rW):
/// out[0][r*h + dy][r*w + dx] = in[r*dy + dx][h][w].
template <typename T>
Tensor<T> depth_to_space(const Tensor<T>& x, int r) {
  if (x.c != r * r) throw config_error("depth_to_space: channel count != r^2");
  Tensor<T> y(x.n, 1, x.h * r, x.w * r);
  for (int in = 0; in < x.n; ++in) {
    T* q = y.ptr(in, 0);
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx) {
        const T* p = x.ptr(in, dy * r + dx);
        for (int i = 0; i < x.h; ++i)
          for (int j = 0; j < x.w; ++j)
            q[(static_cast<size_t>(r * i + dy)) * y.w + (r * j + dx)] =
                p[static_cast<size_t>(i) * x.w + j];
      }
  }
  return y;
}

/// Inverse of depth_to_space (also its adjoint, being a permutation).
template <typename T>
Tensor<T> space_to_depth(const Tensor<T>& y, int r) {
  if (y.c != 1 || y.h % r || y.w % r) throw config_error("space_to_depth: bad shape");
  Tensor<T> x(y.n, r * r, y.h / r, y.w / r);
  for (int in = 0; in < y.n; ++in) {
    const T* q = y.ptr(in, 0);
    for (int dy = 0; dy < r; ++dy)
      for (int dx = 0; dx < r; ++dx) {
        T* p = x.ptr(in, dy * r + dx);
        for (int i = 0; i < x.h; ++i)
          for (int j = 0; j < x.w; ++j)
            p[static_cast<size_t>(i) * x.w + j] =
                q[(static_cast<size_t>(r * i + dy)) * y.w + (r * j + dx)];
      }
  }
  return x;
}

template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.n != b.n || a.h != b.h || a.w != b.w) throw config_error("concat: shape mismatch");
  Tensor<T> y(a.n, a.c + b.c, a.h, a.w);
  for (int in = 0; in < a.n; ++in) {
    std::copy(a.ptr(in, 0), a.ptr(in, 0) + static_cast<size_t>(a.c) * a.plane(), y.ptr(in, 0));
    std::copy(b.ptr(in, 0), b.ptr(in, 0) + static_cast<size_t>(b.c) * b.plane(), y.ptr(in, a.c));
  }
  return y;
}

template <typename T>
void split_channels(const Tensor<T>& dy, int ca, Tensor<T>& da, Tensor<T>& db) {
  da = Tensor<T>(dy.n, ca, dy.h, dy.w);
  db = Tensor<T>(dy.n, dy.c - ca, dy.h, dy.w);
  for (int in = 0; in < dy.n; ++in) {
    std::copy(dy.ptr(in, 0), dy.ptr(in, 0) + static_cast<size_t>(ca) * dy.plane(), da.ptr(in, 0));
    std::copy(dy.ptr(in, ca), dy.ptr(in, ca) + static_cast<size_t>(dy.c - ca) * dy.plane(),
              db.ptr(in, 0));
  }
}

} // namespace misr4d

#endif
