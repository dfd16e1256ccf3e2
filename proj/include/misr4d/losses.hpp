#ifndef MISR4D_LOSSES_HPP
#define MISR4D_LOSSES_HPP

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "misr4d/common.hpp"
#include "misr4d/tensor.hpp"

namespace misr4d {

/// Pluggable feature extractor for the perceptual term. Takes a 3-channel
/// image (1,3,H,W) and returns a feature stack; vjp pulls a cotangent on
/// the features back to the input. Pretrained weights are an external
/// input; the built-in "identity" extractor reduces the perceptual term to
/// a mean squared error.
class FeatureExtractor {
public:
  virtual ~FeatureExtractor() = default;
  virtual std::string name() const = 0;
  virtual Tensor<double> forward(const Tensor<double>& x) const = 0;
  virtual Tensor<double> vjp(const Tensor<double>& x, const Tensor<double>& dfeat) const = 0;
};

/// Returns nullptr for "" or "none"; throws config_error for unknown names.
std::shared_ptr<FeatureExtractor> make_extractor(const std::string& name);

struct LossConfig {
  double lambda = 0.006;
  double step_threshold = 1.0;  ///< Å; strictly below -> perceptual term included
  std::vector<double> msssim_weights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  int window = 11;
  double window_sigma = 1.5;
  double k1 = 0.01, k2 = 0.03;
  std::shared_ptr<FeatureExtractor> extractor;

  void validate() const;
};

template <typename T>
struct LossBreakdown {
  T pixel = 0;
  T ssim = 0;
  std::optional<T> perceptual;
  T total = 0;
  bool perceptual_branch = false;
};

/// Mean absolute error. Optional gradient w.r.t. pred.
template <typename T>
T pixel_loss(const Img<T>& pred, const Img<T>& target, Img<T>* grad = nullptr);

/// 1 - MS-SSIM with the configured window and scale weights; dynamic range
/// taken from the target. Scales j < M contribute mean(cs_j); the final
/// scale contributes mean(l*cs). Optional gradient w.r.t. pred.
template <typename T>
T ms_ssim_loss(const Img<T>& pred, const Img<T>& target, const LossConfig& cfg,
               Img<T>* grad = nullptr);

/// Mean squared error between extractor features of the 3-channel-duplicated
/// images. Optional gradient w.r.t. pred.
template <typename T>
T perceptual_loss(const Img<T>& pred, const Img<T>& target, const FeatureExtractor& extractor,
                  Img<T>* grad = nullptr);

/// pixel + lambda * perceptual + ms-ssim for step_size < threshold;
/// pixel + ms-ssim otherwise. Throws config_error when the perceptual
/// branch fires without an extractor.
template <typename T>
LossBreakdown<T> composite_loss(const Img<T>& pred, const Img<T>& target, double step_size,
                                const LossConfig& cfg, Img<T>* grad = nullptr);

// Building blocks shared with the metrics module.
namespace detail {

template <typename T>
std::vector<T> gaussian_kernel(int n, double sigma) {
  std::vector<T> k(n);
  const double c = (n - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < n; ++i) {
    k[i] = static_cast<T>(std::exp(-sq(i - c) / (2.0 * sigma * sigma)));
    sum += k[i];
  }
  for (auto& v : k) v = static_cast<T>(v / sum);
  return k;
}

/// Valid separable correlation (rows then columns).
template <typename T>
Img<T> sep_corr(const Img<T>& img, const std::vector<T>& k) {
  const int K = static_cast<int>(k.size());
  Img<T> tmp(img.h, img.w - K + 1);
  for (int i = 0; i < img.h; ++i)
    for (int j = 0; j < tmp.w; ++j) {
      T s = 0;
      for (int t = 0; t < K; ++t) s += k[t] * img.at(i, j + t);
      tmp.at(i, j) = s;
    }
  Img<T> out(img.h - K + 1, tmp.w);
  for (int j = 0; j < tmp.w; ++j)
    for (int i = 0; i < out.h; ++i) {
      T s = 0;
      for (int t = 0; t < K; ++t) s += k[t] * tmp.at(i + t, j);
      out.at(i, j) = s;
    }
  return out;
}

/// Adjoint of sep_corr back to an (h, w) image.
template <typename T>
Img<T> sep_corr_adjoint(const Img<T>& g, const std::vector<T>& k, int h, int w) {
  const int K = static_cast<int>(k.size());
  Img<T> tmp(h, g.w);
  for (int j = 0; j < g.w; ++j)
    for (int i = 0; i < g.h; ++i) {
      const T v = g.at(i, j);
      for (int t = 0; t < K; ++t) tmp.at(i + t, j) += k[t] * v;
    }
  Img<T> out(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < g.w; ++j) {
      const T v = tmp.at(i, j);
      for (int t = 0; t < K; ++t) out.at(i, j + t) += k[t] * v;
    }
  return out;
}

template <typename T>
Img<T> avg_pool2(const Img<T>& img) {
  Img<T> out(img.h / 2, img.w / 2);
  for (int i = 0; i < out.h; ++i)
    for (int j = 0; j < out.w; ++j)
      out.at(i, j) = static_cast<T>(0.25 * (img.at(2 * i, 2 * j) + img.at(2 * i, 2 * j + 1) +
                                            img.at(2 * i + 1, 2 * j) + img.at(2 * i + 1, 2 * j + 1)));
  return out;
}

template <typename T>
Img<T> avg_pool2_adjoint(const Img<T>& g, int h, int w) {
  Img<T> out(h, w);
  for (int i = 0; i < g.h; ++i)
    for (int j = 0; j < g.w; ++j) {
      const T v = static_cast<T>(0.25 * g.at(i, j));
      out.at(2 * i, 2 * j) += v;
      out.at(2 * i, 2 * j + 1) += v;
      out.at(2 * i + 1, 2 * j) += v;
      out.at(2 * i + 1, 2 * j + 1) += v;
    }
  return out;
}

/// Per-scale SSIM maps and the moments needed for the backward pass.
template <typename T>
struct SsimMaps {
  Img<T> x, y;            // inputs at this scale
  Img<T> mux, muy;        // Gaussian means
  Img<T> cs, l;           // contrast-structure and luminance maps
  Img<T> den_cs, den_l;   // denominators
};

template <typename T>
SsimMaps<T> ssim_maps(const Img<T>& x, const Img<T>& y, const std::vector<T>& k, T c1, T c2) {
  SsimMaps<T> m;
  m.x = x;
  m.y = y;
  m.mux = sep_corr(x, k);
  m.muy = sep_corr(y, k);
  Img<T> x2 = x, y2 = y, xy = x;
  for (size_t i = 0; i < x.v.size(); ++i) {
    x2.v[i] = x.v[i] * x.v[i];
    y2.v[i] = y.v[i] * y.v[i];
    xy.v[i] = x.v[i] * y.v[i];
  }
  Img<T> sxx = sep_corr(x2, k), syy = sep_corr(y2, k), sxy = sep_corr(xy, k);
  m.cs = Img<T>(m.mux.h, m.mux.w);
  m.l = Img<T>(m.mux.h, m.mux.w);
  m.den_cs = Img<T>(m.mux.h, m.mux.w);
  m.den_l = Img<T>(m.mux.h, m.mux.w);
  for (size_t i = 0; i < m.mux.v.size(); ++i) {
    const T mx = m.mux.v[i], my = m.muy.v[i];
    const T vx = sxx.v[i] - mx * mx;
    const T vy = syy.v[i] - my * my;
    const T vxy = sxy.v[i] - mx * my;
    const T dc = vx + vy + c2;
    const T dl = mx * mx + my * my + c1;
    m.den_cs.v[i] = dc;
    m.den_l.v[i] = dl;
    m.cs.v[i] = (2 * vxy + c2) / dc;
    m.l.v[i] = (2 * mx * my + c1) / dl;
  }
  return m;
}

} // namespace detail

} // namespace misr4d

#include "misr4d/losses_impl.hpp"

#endif
