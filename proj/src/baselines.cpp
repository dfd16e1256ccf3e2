#include "misr4d/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "misr4d/fftutil.hpp"

namespace misr4d {

ImageF bf_sum(const DataCube4D& cube, const std::vector<uint8_t>& mask) {
  if (cube.layout != Layout::RealMajor) throw config_error("bf_sum: cube must be REAL_MAJOR");
  if (mask.size() != cube.pattern_px()) throw config_error("bf_sum: mask does not fit detector");
  if (std::find(mask.begin(), mask.end(), uint8_t(1)) == mask.end())
    throw config_error("bf_sum: empty mask");
  ImageF out(cube.scan_h, cube.scan_w);
  for (int rx = 0; rx < cube.scan_h; ++rx)
    for (int ry = 0; ry < cube.scan_w; ++ry) {
      const float* pat = cube.pattern(rx, ry);
      double s = 0;
      for (size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) s += pat[i];
      out.at(rx, ry) = static_cast<float>(s);
    }
  return out;
}

namespace {

inline double cubic_weight(double t) {
  // Catmull-Rom, a = -0.5
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2) * t - (a + 3)) * t * t + 1;
  if (t < 2.0) return ((a * t - 5 * a) * t + 8 * a) * t - 4 * a;
  return 0.0;
}

} // namespace

ImageF resample_bicubic(const ImageF& img, int oh, int ow, double shift_x, double shift_y) {
  ImageF out(oh, ow);
  const double rx = double(img.h) / oh, ry = double(img.w) / ow;
  for (int i = 0; i < oh; ++i) {
    const double sx = (i + 0.5) * rx - 0.5 + shift_x;
    const int x0 = static_cast<int>(std::floor(sx));
    for (int j = 0; j < ow; ++j) {
      const double sy = (j + 0.5) * ry - 0.5 + shift_y;
      const int y0 = static_cast<int>(std::floor(sy));
      double acc = 0;
      for (int di = -1; di <= 2; ++di) {
        const int xi = std::clamp(x0 + di, 0, img.h - 1);
        const double wx = cubic_weight(sx - (x0 + di));
        for (int dj = -1; dj <= 2; ++dj) {
          const int yj = std::clamp(y0 + dj, 0, img.w - 1);
          acc += wx * cubic_weight(sy - (y0 + dj)) * img.at(xi, yj);
        }
      }
      out.at(i, j) = static_cast<float>(acc);
    }
  }
  return out;
}

ComMap center_of_mass(const DataCube4D& cube) {
  if (cube.layout != Layout::RealMajor)
    throw config_error("center_of_mass: cube must be REAL_MAJOR");
  const auto& c = cube.calib;
  ComMap m;
  m.com_x = ImageF(cube.scan_h, cube.scan_w);
  m.com_y = ImageF(cube.scan_h, cube.scan_w);
  for (int rx = 0; rx < cube.scan_h; ++rx) {
    for (int ry = 0; ry < cube.scan_w; ++ry) {
      const float* pat = cube.pattern(rx, ry);
      double tot = 0, sx = 0, sy = 0;
      for (int qx = 0; qx < c.det_h; ++qx)
        for (int qy = 0; qy < c.det_w; ++qy) {
          const double v = pat[qx * c.det_w + qy];
          tot += v;
          sx += v * qx;
          sy += v * qy;
        }
      if (tot <= 0) {
        ++m.empty_patterns;
        continue;
      }
      m.com_x.at(rx, ry) = static_cast<float>((sx / tot - c.center_x) * c.detector_pixel);
      m.com_y.at(rx, ry) = static_cast<float>((sy / tot - c.center_y) * c.detector_pixel);
    }
  }
  return m;
}

ImageF idpc(const DataCube4D& cube) {
  const ComMap m = center_of_mass(cube);
  const int h = cube.scan_h, w = cube.scan_w;
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<std::complex<double>> fx(n), fy(n);
  for (size_t i = 0; i < n; ++i) {
    fx[i] = m.com_x.v[i];
    fy[i] = m.com_y.v[i];
  }
  FftPlan2D fwd(h, w, FFTW_FORWARD), bwd(h, w, FFTW_BACKWARD);
  fwd.run(fx.data());
  fwd.run(fy.data());

  std::vector<std::complex<double>> g(n);
  for (int i = 0; i < h; ++i) {
    const double kx = fft_freq(i, h);
    for (int j = 0; j < w; ++j) {
      const double ky = fft_freq(j, w);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;  // zero-frequency term removed
      const std::complex<double> num =
          kx * fx[static_cast<size_t>(i) * w + j] + ky * fy[static_cast<size_t>(i) * w + j];
      g[static_cast<size_t>(i) * w + j] = num / (std::complex<double>(0.0, 1.0) * k2);
    }
  }
  bwd.run(g.data());
  ImageF out(h, w);
  double mean = 0;
  for (size_t i = 0; i < n; ++i) {
    out.v[i] = static_cast<float>(g[i].real() / n);
    mean += out.v[i];
  }
  mean /= n;
  for (auto& v : out.v) v = static_cast<float>(v - mean);
  return out;
}

std::array<double, 2> phase_correlation_shift(const ImageF& a, const ImageF& b, double* peak) {
  if (!a.same_shape(b)) throw config_error("phase_correlation_shift: shape mismatch");
  const int h = a.h, w = a.w;
  const size_t n = static_cast<size_t>(h) * w;
  std::vector<std::complex<double>> fa(n), fb(n);
  const double ma = a.mean(), mb = b.mean();
  for (size_t i = 0; i < n; ++i) {
    fa[i] = a.v[i] - ma;
    fb[i] = b.v[i] - mb;
  }
  FftPlan2D fwd(h, w, FFTW_FORWARD), bwd(h, w, FFTW_BACKWARD);
  fwd.run(fa.data());
  fwd.run(fb.data());

  std::vector<std::complex<double>> r(n);
  double maxmag = 0;
  for (size_t i = 0; i < n; ++i) maxmag = std::max(maxmag, std::abs(fa[i] * std::conj(fb[i])));
  const double eps = 1e-15 * std::max(1.0, maxmag);
  for (size_t i = 0; i < n; ++i) {
    const std::complex<double> c = fa[i] * std::conj(fb[i]);
    r[i] = c / (std::abs(c) + eps);
  }
  std::vector<std::complex<double>> corr = r;
  bwd.run(corr.data());

  size_t best = 0;
  double bv = corr[0].real();
  for (size_t i = 1; i < n; ++i)
    if (corr[i].real() > bv) {
      bv = corr[i].real();
      best = i;
    }
  int pi = static_cast<int>(best / w), pj = static_cast<int>(best % w);
  if (pi > h / 2) pi -= h;
  if (pj > w / 2) pj -= w;

  // 10x upsampled local search of the correlation around the integer peak
  double best_val = -1e300, bx = pi, by = pj;
  for (int du = -10; du <= 10; ++du) {
    const double x = pi + du * 0.1;
    for (int dv = -10; dv <= 10; ++dv) {
      const double y = pj + dv * 0.1;
      std::complex<double> s = 0;
      for (int i = 0; i < h; ++i) {
        const double kx = fft_freq(i, h);
        for (int j = 0; j < w; ++j) {
          const double ky = fft_freq(j, w);
          s += r[static_cast<size_t>(i) * w + j] *
               std::polar(1.0, 2.0 * M_PI * (kx * x + ky * y));
        }
      }
      if (s.real() > best_val) {
        best_val = s.real();
        bx = x;
        by = y;
      }
    }
  }
  if (peak) *peak = best_val / static_cast<double>(n);
  return {bx, by};
}

ParallaxResult parallax(const ViewStack& stack, int upscale, double confidence_threshold) {
  if (stack.v < 2) throw config_error("parallax: need at least 2 views");
  ParallaxResult res;
  res.angles = stack.angles;
  res.confidence_threshold = confidence_threshold;
  res.shifts.assign(stack.v, {0.0, 0.0});
  res.used.assign(stack.v, 1);

  double best = 1e300;
  for (int k = 0; k < stack.v; ++k) {
    const double a2 = sq(stack.angles[k][0]) + sq(stack.angles[k][1]);
    if (a2 < best) {
      best = a2;
      res.axial_view = k;
    }
  }

  const int h = stack.h, w = stack.w;
  ImageF axial(h, w);
  std::copy(stack.view(res.axial_view), stack.view(res.axial_view) + axial.size(),
            axial.v.begin());

  const int oh = h * upscale, ow = w * upscale;
  ImageF acc(oh, ow);
  int n_used = 0;
  for (int k = 0; k < stack.v; ++k) {
    ImageF view(h, w);
    std::copy(stack.view(k), stack.view(k) + view.size(), view.v.begin());
    std::array<double, 2> s{0.0, 0.0};
    if (k != res.axial_view) {
      double peak = 0;
      s = phase_correlation_shift(view, axial, &peak);
      if (peak < confidence_threshold) {
        res.used[k] = 0;
        res.shifts[k] = s;
        continue;
      }
    }
    res.shifts[k] = s;
    const ImageF aligned = resample_bicubic(view, oh, ow, s[0], s[1]);
    for (size_t i = 0; i < acc.v.size(); ++i) acc.v[i] += aligned.v[i];
    ++n_used;
  }
  if (n_used == 0) throw numeric_error("parallax: all views excluded");
  for (auto& v : acc.v) v /= static_cast<float>(n_used);
  res.image = std::move(acc);
  return res;
}

} // namespace misr4d
