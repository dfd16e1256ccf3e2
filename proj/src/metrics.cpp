#include "misr4d/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include "misr4d/fftutil.hpp"
#include "misr4d/losses.hpp"

namespace misr4d {

double psnr(const ImageF& pred, const ImageF& target) {
  if (!pred.same_shape(target)) throw config_error("psnr: shape mismatch");
  const double range = double(target.max()) - double(target.min());
  if (!(range > 0)) throw numeric_error("psnr: constant target");
  double mse = 0;
  for (size_t i = 0; i < pred.size(); ++i) mse += sq(double(pred.v[i]) - target.v[i]);
  mse /= pred.size();
  if (mse == 0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(range * range / mse);
}

double ssim(const ImageF& pred, const ImageF& target) {
  if (!pred.same_shape(target)) throw config_error("ssim: shape mismatch");
  const int window = 11;
  if (pred.h < window || pred.w < window) throw config_error("ssim: image smaller than window");
  double range = double(target.max()) - double(target.min());
  if (!(range > 0)) range = 1.0;
  const double c1 = sq(0.01 * range), c2 = sq(0.03 * range);
  const auto kern = detail::gaussian_kernel<double>(window, 1.5);
  const auto maps = detail::ssim_maps(pred.cast<double>(), target.cast<double>(), kern, c1, c2);
  double s = 0;
  for (size_t i = 0; i < maps.cs.v.size(); ++i) s += maps.l.v[i] * maps.cs.v[i];
  return s / maps.cs.v.size();
}

double cnr(const ImageF& img, const std::vector<uint8_t>& signal_mask,
           const std::vector<uint8_t>& background_mask) {
  if (signal_mask.size() != img.size() || background_mask.size() != img.size())
    throw config_error("cnr: mask size mismatch");
  double ms = 0, mb = 0;
  size_t ns = 0, nb = 0;
  for (size_t i = 0; i < img.size(); ++i) {
    if (signal_mask[i] && background_mask[i]) throw config_error("cnr: masks overlap");
    if (signal_mask[i]) {
      ms += img.v[i];
      ++ns;
    } else if (background_mask[i]) {
      mb += img.v[i];
      ++nb;
    }
  }
  if (ns == 0 || nb == 0) throw config_error("cnr: empty mask");
  ms /= ns;
  mb /= nb;
  double var = 0;
  for (size_t i = 0; i < img.size(); ++i)
    if (background_mask[i]) var += sq(img.v[i] - mb);
  var /= nb;
  if (!(var > 0)) throw numeric_error("cnr: zero background variance");
  return (ms - mb) / std::sqrt(var);
}

std::vector<double> line_profile(const ImageF& img, std::array<double, 2> p0,
                                 std::array<double, 2> p1, int n_samples) {
  if (n_samples < 2) throw config_error("line_profile: need at least 2 samples");
  for (const auto& p : {p0, p1})
    if (p[0] < 0 || p[0] > img.h - 1 || p[1] < 0 || p[1] > img.w - 1)
      throw config_error("line_profile: endpoint out of bounds");
  std::vector<double> out(n_samples);
  for (int s = 0; s < n_samples; ++s) {
    const double t = double(s) / (n_samples - 1);
    const double x = p0[0] + t * (p1[0] - p0[0]);
    const double y = p0[1] + t * (p1[1] - p0[1]);
    const int x0 = std::min(static_cast<int>(std::floor(x)), img.h - 2);
    const int y0 = std::min(static_cast<int>(std::floor(y)), img.w - 2);
    const double fx = x - x0, fy = y - y0;
    out[s] = (1 - fx) * (1 - fy) * img.at(x0, y0) + (1 - fx) * fy * img.at(x0, y0 + 1) +
             fx * (1 - fy) * img.at(x0 + 1, y0) + fx * fy * img.at(x0 + 1, y0 + 1);
  }
  return out;
}

SpectralResult spectral_cutoff(const ImageF& img, double pixel_size, double floor_factor) {
  if (img.h < 32 || img.w < 32) throw config_error("spectral_cutoff: image smaller than 32x32");
  if (!(pixel_size > 0)) throw config_error("spectral_cutoff: pixel_size must be > 0");
  const int h = img.h, w = img.w;
  const size_t n = static_cast<size_t>(h) * w;
  const double mean = img.mean();
  std::vector<std::complex<double>> buf(n);
  for (size_t i = 0; i < n; ++i) buf[i] = img.v[i] - mean;
  FftPlan2D fwd(h, w, FFTW_FORWARD);
  fwd.run(buf.data());

  const double nyquist = 1.0 / (2.0 * pixel_size);
  const double df = 1.0 / (std::min(h, w) * pixel_size);
  const int nbins = static_cast<int>(nyquist / df) + 1;
  std::vector<double> power(nbins, 0.0);
  std::vector<long> count(nbins, 0);
  for (int i = 0; i < h; ++i) {
    const double fx = fft_freq(i, h) / pixel_size;
    for (int j = 0; j < w; ++j) {
      const double fy = fft_freq(j, w) / pixel_size;
      const double f = std::sqrt(fx * fx + fy * fy);
      const int b = static_cast<int>(f / df);
      if (b >= nbins) continue;
      power[b] += std::norm(buf[static_cast<size_t>(i) * w + j]);
      ++count[b];
    }
  }
  SpectralResult res;
  res.freq.resize(nbins);
  res.power.resize(nbins);
  double maxp = 0;
  for (int b = 0; b < nbins; ++b) {
    res.freq[b] = (b + 0.5) * df;
    res.power[b] = count[b] ? power[b] / count[b] : 0.0;
    maxp = std::max(maxp, res.power[b]);
  }
  if (maxp <= 0) return res;  // flat image: cutoff 0

  // 3-bin moving average, skipping the DC bin
  std::vector<double> smooth(res.power);
  for (int b = 1; b < nbins; ++b) {
    double s = res.power[b];
    int c = 1;
    if (b > 1) {
      s += res.power[b - 1];
      ++c;
    }
    if (b + 1 < nbins) {
      s += res.power[b + 1];
      ++c;
    }
    smooth[b] = s / c;
  }

  std::vector<double> outer;
  for (int b = static_cast<int>(0.9 * nbins); b < nbins; ++b) outer.push_back(res.power[b]);
  std::sort(outer.begin(), outer.end());
  const double med = outer.empty() ? 0.0 : outer[outer.size() / 2];
  res.noise_floor = std::max(med, 1e-12 * maxp);

  long above = 0, total = 0;
  for (int b = 1; b < nbins; ++b) {
    ++total;
    if (smooth[b] >= res.noise_floor / floor_factor) ++above;
  }
  if (total > 0 && double(above) / total > 0.9) {
    res.floor_dominated = true;
    res.cutoff = nyquist;
    return res;
  }
  for (int b = nbins - 1; b >= 1; --b) {
    if (smooth[b] >= floor_factor * res.noise_floor) {
      res.cutoff = res.freq[b];
      break;
    }
  }
  return res;
}

double pearson(const ImageF& a, const ImageF& b) {
  if (!a.same_shape(b)) throw config_error("pearson: shape mismatch");
  const double ma = a.mean(), mb = b.mean();
  double sab = 0, saa = 0, sbb = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double da = a.v[i] - ma, db = b.v[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0 || sbb <= 0) throw numeric_error("pearson: constant input");
  return sab / std::sqrt(saa * sbb);
}

std::array<double, 2> affine_fit(const ImageF& src, const ImageF& dst) {
  if (!src.same_shape(dst)) throw config_error("affine_fit: shape mismatch");
  const double ms = src.mean(), md = dst.mean();
  double cov = 0, var = 0;
  for (size_t i = 0; i < src.size(); ++i) {
    cov += (src.v[i] - ms) * (dst.v[i] - md);
    var += sq(src.v[i] - ms);
  }
  if (var <= 0) return {0.0, md};
  const double a = cov / var;
  return {a, md - a * ms};
}

ImageF apply_affine_fit(const ImageF& src, const ImageF& dst) {
  const auto [a, b] = affine_fit(src, dst);
  ImageF out = src;
  for (auto& v : out.v) v = static_cast<float>(a * v + b);
  return out;
}

void quartile_masks(const ImageF& reference, std::vector<uint8_t>& signal,
                    std::vector<uint8_t>& background) {
  std::vector<float> sorted(reference.v);
  std::sort(sorted.begin(), sorted.end());
  const float q25 = sorted[sorted.size() / 4];
  const float q75 = sorted[(sorted.size() * 3) / 4];
  signal.assign(reference.size(), 0);
  background.assign(reference.size(), 0);
  for (size_t i = 0; i < reference.size(); ++i) {
    if (reference.v[i] >= q75) signal[i] = 1;
    else if (reference.v[i] <= q25) background[i] = 1;
  }
}

} // namespace misr4d
