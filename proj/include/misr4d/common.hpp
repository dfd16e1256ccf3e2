#ifndef MISR4D_COMMON_HPP
#define MISR4D_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace misr4d {

/// Bad configuration, bad arguments, incompatible shapes. CLI exit code 2.
class config_error : public std::runtime_error {
public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerical failure at runtime (non-finite loss, degenerate data). CLI exit code 3.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Dense row-major 2-D image. Axis 0 is the first coordinate of every
/// (x, y)-style pair used in this codebase, so img.at(x, y) and array
/// notation img[x][y] agree.
template <typename T>
struct Img {
  int h = 0, w = 0;
  std::vector<T> v;

  Img() = default;
  Img(int h_, int w_, T fill = T(0)) : h(h_), w(w_), v(static_cast<size_t>(h_) * w_, fill) {}

  T& at(int i, int j) { return v[static_cast<size_t>(i) * w + j]; }
  const T& at(int i, int j) const { return v[static_cast<size_t>(i) * w + j]; }
  size_t size() const { return v.size(); }
  bool same_shape(const Img& o) const { return h == o.h && w == o.w; }

  T min() const {
    T m = v.empty() ? T(0) : v[0];
    for (T x : v) m = std::min(m, x);
    return m;
  }
  T max() const {
    T m = v.empty() ? T(0) : v[0];
    for (T x : v) m = std::max(m, x);
    return m;
  }
  double mean() const {
    double s = 0;
    for (T x : v) s += x;
    return v.empty() ? 0.0 : s / v.size();
  }

  template <typename U>
  Img<U> cast() const {
    Img<U> o(h, w);
    for (size_t i = 0; i < v.size(); ++i) o.v[i] = static_cast<U>(v[i]);
    return o;
  }
};

using ImageF = Img<float>;
using ImageD = Img<double>;

inline double sq(double x) { return x * x; }

} // namespace misr4d

#endif
