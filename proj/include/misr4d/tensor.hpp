#ifndef MISR4D_TENSOR_HPP
#define MISR4D_TENSOR_HPP

#include <vector>

#include "misr4d/common.hpp"

namespace misr4d {

/// Dense NCHW tensor.
template <typename T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> v;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_)
      : n(n_), c(c_), h(h_), w(w_),
        v(static_cast<size_t>(n_) * c_ * h_ * w_, T(0)) {}

  size_t size() const { return v.size(); }
  size_t plane() const { return static_cast<size_t>(h) * w; }

  T* ptr(int in, int ic) { return v.data() + (static_cast<size_t>(in) * c + ic) * plane(); }
  const T* ptr(int in, int ic) const {
    return v.data() + (static_cast<size_t>(in) * c + ic) * plane();
  }

  T& at(int in, int ic, int ih, int iw) {
    return v[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
  }
  const T& at(int in, int ic, int ih, int iw) const {
    return v[((static_cast<size_t>(in) * c + ic) * h + ih) * w + iw];
  }

  bool same_shape(const Tensor& o) const {
    return n == o.n && c == o.c && h == o.h && w == o.w;
  }

  void zero() { std::fill(v.begin(), v.end(), T(0)); }
};

} // namespace misr4d

#endif
