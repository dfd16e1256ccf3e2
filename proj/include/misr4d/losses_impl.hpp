#ifndef MISR4D_LOSSES_IMPL_HPP
#define MISR4D_LOSSES_IMPL_HPP

// Template implementation for losses.hpp; do not include directly.

namespace misr4d {

template <typename T>
T pixel_loss(const Img<T>& pred, const Img<T>& target, Img<T>* grad) {
  if (!pred.same_shape(target)) throw config_error("pixel_loss: shape mismatch");
  const size_t n = pred.size();
  if (grad) *grad = Img<T>(pred.h, pred.w);
  double s = 0;
  for (size_t i = 0; i < n; ++i) {
    const T d = pred.v[i] - target.v[i];
    s += std::abs(double(d));
    if (grad) grad->v[i] = (d > 0 ? T(1) : (d < 0 ? T(-1) : T(0))) / static_cast<T>(n);
  }
  return static_cast<T>(s / n);
}

template <typename T>
T ms_ssim_loss(const Img<T>& pred, const Img<T>& target, const LossConfig& cfg, Img<T>* grad) {
  if (!pred.same_shape(target)) throw config_error("ms_ssim_loss: shape mismatch");
  cfg.validate();
  const int M = static_cast<int>(cfg.msssim_weights.size());
  const int mindim = std::min(pred.h, pred.w);
  int feasible = 0;
  for (int m = 1; m <= M; ++m)
    if (mindim / (1 << (m - 1)) >= cfg.window) feasible = m;
  if (feasible < M)
    throw config_error("ms_ssim_loss: image " + std::to_string(pred.h) + "x" +
                       std::to_string(pred.w) + " supports at most " + std::to_string(feasible) +
                       " scales (requested " + std::to_string(M) + ")");

  double range = double(target.max()) - double(target.min());
  if (!(range > 0)) range = 1.0;
  const T c1 = static_cast<T>(sq(cfg.k1 * range));
  const T c2 = static_cast<T>(sq(cfg.k2 * range));
  const auto kern = detail::gaussian_kernel<T>(cfg.window, cfg.window_sigma);
  constexpr double kMinStat = 1e-8;

  std::vector<detail::SsimMaps<T>> maps(M);
  std::vector<double> mterm(M);  // mean(cs) for j<M-1, mean(l*cs) at the last scale
  Img<T> x = pred, y = target;
  for (int j = 0; j < M; ++j) {
    maps[j] = detail::ssim_maps(x, y, kern, c1, c2);
    double s = 0;
    const auto& mj = maps[j];
    if (j + 1 < M) {
      for (const T v : mj.cs.v) s += v;
    } else {
      for (size_t i = 0; i < mj.cs.v.size(); ++i) s += double(mj.cs.v[i]) * mj.l.v[i];
    }
    mterm[j] = s / mj.cs.v.size();
    if (j + 1 < M) {
      x = detail::avg_pool2(x);
      y = detail::avg_pool2(y);
    }
  }

  double msssim = 1.0;
  for (int j = 0; j < M; ++j)
    msssim *= std::pow(std::max(mterm[j], kMinStat), cfg.msssim_weights[j]);
  const T loss = static_cast<T>(1.0 - msssim);
  if (!grad) return loss;

  // d(loss)/d(mterm_j); zero where the clamp is active
  std::vector<double> dmterm(M, 0.0);
  for (int j = 0; j < M; ++j)
    if (mterm[j] > kMinStat) dmterm[j] = -msssim * cfg.msssim_weights[j] / mterm[j];

  Img<T> dacc;  // gradient on x at the current (coarsest-first) scale
  for (int j = M - 1; j >= 0; --j) {
    const auto& mj = maps[j];
    const size_t npx = mj.cs.v.size();
    Img<T> dcs(mj.cs.h, mj.cs.w), dl(mj.cs.h, mj.cs.w);
    if (j + 1 < M) {
      const T u = static_cast<T>(dmterm[j] / npx);
      for (auto& v : dcs.v) v = u;
    } else {
      const T u = static_cast<T>(dmterm[j] / npx);
      for (size_t i = 0; i < npx; ++i) {
        dcs.v[i] = u * mj.l.v[i];
        dl.v[i] = u * mj.cs.v[i];
      }
    }
    // map-level gradients -> moment gradients
    Img<T> dmux(mj.cs.h, mj.cs.w), dsxx(mj.cs.h, mj.cs.w), dsxy(mj.cs.h, mj.cs.w);
    for (size_t i = 0; i < npx; ++i) {
      const T dvxy = dcs.v[i] * 2 / mj.den_cs.v[i];
      const T dvx = -dcs.v[i] * mj.cs.v[i] / mj.den_cs.v[i];
      T dmx = T(0);
      if (j + 1 == M)
        dmx += dl.v[i] * (2 * mj.muy.v[i] - 2 * mj.mux.v[i] * mj.l.v[i]) / mj.den_l.v[i];
      dmx += -2 * mj.mux.v[i] * dvx - mj.muy.v[i] * dvxy;
      dmux.v[i] = dmx;
      dsxx.v[i] = dvx;
      dsxy.v[i] = dvxy;
    }
    Img<T> dx = detail::sep_corr_adjoint(dmux, kern, mj.x.h, mj.x.w);
    Img<T> axx = detail::sep_corr_adjoint(dsxx, kern, mj.x.h, mj.x.w);
    Img<T> axy = detail::sep_corr_adjoint(dsxy, kern, mj.x.h, mj.x.w);
    for (size_t i = 0; i < dx.v.size(); ++i)
      dx.v[i] += 2 * mj.x.v[i] * axx.v[i] + mj.y.v[i] * axy.v[i];
    if (j + 1 < M) {
      Img<T> up = detail::avg_pool2_adjoint(dacc, mj.x.h, mj.x.w);
      for (size_t i = 0; i < dx.v.size(); ++i) dx.v[i] += up.v[i];
    }
    dacc = std::move(dx);
  }
  *grad = std::move(dacc);
  return loss;
}

template <typename T>
T perceptual_loss(const Img<T>& pred, const Img<T>& target, const FeatureExtractor& extractor,
                  Img<T>* grad) {
  if (!pred.same_shape(target)) throw config_error("perceptual_loss: shape mismatch");
  auto to3 = [](const Img<T>& im) {
    Tensor<double> t(1, 3, im.h, im.w);
    for (int c = 0; c < 3; ++c)
      for (size_t i = 0; i < im.v.size(); ++i) t.ptr(0, c)[i] = double(im.v[i]);
    return t;
  };
  const Tensor<double> xp = to3(pred);
  const Tensor<double> xt = to3(target);
  const Tensor<double> fp = extractor.forward(xp);
  const Tensor<double> ft = extractor.forward(xt);
  if (!fp.same_shape(ft)) throw numeric_error("perceptual_loss: extractor output mismatch");
  const double norm = double(fp.c) * fp.h * fp.w;
  double s = 0;
  for (size_t i = 0; i < fp.v.size(); ++i) s += sq(fp.v[i] - ft.v[i]);
  const T loss = static_cast<T>(s / norm);
  if (!grad) return loss;

  Tensor<double> dfeat = fp;
  for (size_t i = 0; i < dfeat.v.size(); ++i) dfeat.v[i] = 2.0 * (fp.v[i] - ft.v[i]) / norm;
  const Tensor<double> dx = extractor.vjp(xp, dfeat);
  *grad = Img<T>(pred.h, pred.w);
  for (int c = 0; c < 3; ++c)
    for (size_t i = 0; i < grad->v.size(); ++i)
      grad->v[i] += static_cast<T>(dx.ptr(0, c)[i]);
  return loss;
}

template <typename T>
LossBreakdown<T> composite_loss(const Img<T>& pred, const Img<T>& target, double step_size,
                                const LossConfig& cfg, Img<T>* grad) {
  if (!(step_size > 0)) throw config_error("composite_loss: step_size must be > 0");
  cfg.validate();
  LossBreakdown<T> out;
  out.perceptual_branch = step_size < cfg.step_threshold;

  Img<T> gpix, gssim, gperc;
  out.pixel = pixel_loss(pred, target, grad ? &gpix : nullptr);
  out.ssim = ms_ssim_loss(pred, target, cfg, grad ? &gssim : nullptr);
  out.total = out.pixel + out.ssim;
  if (out.perceptual_branch) {
    if (!cfg.extractor) throw config_error("perceptual extractor not configured");
    out.perceptual = perceptual_loss(pred, target, *cfg.extractor, grad ? &gperc : nullptr);
    out.total += static_cast<T>(cfg.lambda) * *out.perceptual;
  }
  if (grad) {
    *grad = Img<T>(pred.h, pred.w);
    for (size_t i = 0; i < grad->size(); ++i) {
      T g = gpix.v[i] + gssim.v[i];
      if (out.perceptual_branch) g += static_cast<T>(cfg.lambda) * gperc.v[i];
      grad->v[i] = g;
    }
  }
  return out;
}

} // namespace misr4d

#endif
