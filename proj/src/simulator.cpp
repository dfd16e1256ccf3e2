#include "misr4d/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <omp.h>

#include "misr4d/fftutil.hpp"
#include "misr4d/rng.hpp"

namespace misr4d {

double electron_wavelength(double energy_kev) {
  if (energy_kev <= 0) throw config_error("electron_wavelength: energy must be > 0");
  // CODATA 2018
  constexpr double h = 6.62607015e-34;    // J s
  constexpr double m0 = 9.1093837015e-31; // kg
  constexpr double e = 1.602176634e-19;   // C
  constexpr double c = 2.99792458e8;      // m/s
  const double V = energy_kev * 1e3;
  const double lambda_m = h / std::sqrt(2.0 * m0 * e * V * (1.0 + e * V / (2.0 * m0 * c * c)));
  return lambda_m * 1e10;
}

PhantomKind phantom_kind_from_string(const std::string& s) {
  if (s == "crystal") return PhantomKind::Crystal;
  if (s == "amorphous") return PhantomKind::Amorphous;
  if (s == "blob") return PhantomKind::Blob;
  throw config_error("unknown phantom kind: " + s);
}

std::string to_string(PhantomKind k) {
  switch (k) {
    case PhantomKind::Crystal: return "crystal";
    case PhantomKind::Amorphous: return "amorphous";
    case PhantomKind::Blob: return "blob";
  }
  return "?";
}

ImageF Phantom::render(int h, int w, double px, double x0, double y0) const {
  ImageF out(h, w, 0.0f);
  if (!atoms.empty() || !shells.empty()) {
    for (const Atom& a : atoms) {
      // splat within 4 sigma
      const double r = 4.0 * a.sigma;
      const int i0 = std::max(0, static_cast<int>(std::floor((a.x - r - x0) / px - 0.5)));
      const int i1 = std::min(h - 1, static_cast<int>(std::ceil((a.x + r - x0) / px - 0.5)));
      const int j0 = std::max(0, static_cast<int>(std::floor((a.y - r - y0) / px - 0.5)));
      const int j1 = std::min(w - 1, static_cast<int>(std::ceil((a.y + r - y0) / px - 0.5)));
      const double inv2s2 = 1.0 / (2.0 * a.sigma * a.sigma);
      for (int i = i0; i <= i1; ++i) {
        const double dx = x0 + (i + 0.5) * px - a.x;
        for (int j = j0; j <= j1; ++j) {
          const double dy = y0 + (j + 0.5) * px - a.y;
          out.at(i, j) += static_cast<float>(a.amplitude * std::exp(-(dx * dx + dy * dy) * inv2s2));
        }
      }
    }
    if (!shells.empty()) {
      const double cx = extent / 2.0, cy = extent / 2.0;
      for (int i = 0; i < h; ++i) {
        const double dx = x0 + (i + 0.5) * px - cx;
        for (int j = 0; j < w; ++j) {
          const double dy = y0 + (j + 0.5) * px - cy;
          const double rho = std::sqrt(dx * dx + dy * dy);
          double v = 0;
          for (const Shell& s : shells)
            v += s.amplitude * std::exp(-sq(rho - s.radius) / (2.0 * s.thickness * s.thickness));
          out.at(i, j) += static_cast<float>(v);
        }
      }
    }
    return out;
  }
  // No analytic description: resample the stored raster bilinearly.
  if (phase.size() == 0) throw config_error("phantom has neither analytic model nor raster");
  for (int i = 0; i < h; ++i) {
    const double sx = (x0 + (i + 0.5) * px) / pixel_size - 0.5;
    for (int j = 0; j < w; ++j) {
      const double sy = (y0 + (j + 0.5) * px) / pixel_size - 0.5;
      const int u = std::clamp(static_cast<int>(std::floor(sx)), 0, phase.h - 2);
      const int v = std::clamp(static_cast<int>(std::floor(sy)), 0, phase.w - 2);
      const double fu = std::clamp(sx - u, 0.0, 1.0), fv = std::clamp(sy - v, 0.0, 1.0);
      out.at(i, j) = static_cast<float>((1 - fu) * (1 - fv) * phase.at(u, v) +
                                        (1 - fu) * fv * phase.at(u, v + 1) +
                                        fu * (1 - fv) * phase.at(u + 1, v) +
                                        fu * fv * phase.at(u + 1, v + 1));
    }
  }
  return out;
}

namespace {

void check_weak_phase(const ImageF& phase) {
  float m = 0;
  for (float v : phase.v) {
    if (!std::isfinite(v)) throw numeric_error("phantom phase is not finite");
    m = std::max(m, std::abs(v));
  }
  if (m > 1.0f)
    throw config_error("phantom phase exceeds 1 rad (max " + std::to_string(m) +
                       "); reduce amplitude");
}

} // namespace

Phantom make_phantom(PhantomKind kind, const nlohmann::json& params, uint64_t seed) {
  Phantom ph;
  ph.kind = kind;
  ph.seed = seed;
  ph.extent = params.value("extent_A", 256.0);
  ph.pixel_size = params.value("pixel_size_A", 0.5);
  if (ph.extent <= 0 || ph.pixel_size <= 0)
    throw config_error("phantom: extent_A and pixel_size_A must be > 0");
  SplitMix64 rng(derive_seed(seed, 0xC0FFEE));

  if (kind == PhantomKind::Crystal) {
    const double a = params.value("lattice_a_A", 4.0);
    const double b = params.value("lattice_b_A", a);
    const double ang = params.value("angle_deg", 90.0) * M_PI / 180.0;
    const double sigma = params.value("atom_sigma_A", 0.8);
    const double amp = params.value("amplitude_rad", 0.5);
    const double jitter = params.value("jitter_A", 0.0);
    if (a <= 0 || b <= 0 || sigma <= 0) throw config_error("crystal params must be > 0");
    std::vector<std::pair<double, double>> basis{{0.0, 0.0}};
    if (params.contains("basis")) {
      basis.clear();
      for (const auto& e : params.at("basis")) basis.push_back({e.at(0), e.at(1)});
    }
    const double a2x = b * std::cos(ang), a2y = b * std::sin(ang);
    const int ni = static_cast<int>(std::ceil(ph.extent / a)) + 2;
    const int nj = static_cast<int>(std::ceil(ph.extent / std::max(1e-9, a2y))) + 2;
    for (int i = -1; i <= ni; ++i) {
      for (int j = -1; j <= nj; ++j) {
        for (const auto& [fx, fy] : basis) {
          double x = (i + fx) * a + (j + fy) * a2x;
          double y = (j + fy) * a2y;
          if (jitter > 0) {
            std::normal_distribution<double> nd(0.0, jitter);
            x += nd(rng);
            y += nd(rng);
          }
          if (x < -4 * sigma || x > ph.extent + 4 * sigma) continue;
          if (y < -4 * sigma || y > ph.extent + 4 * sigma) continue;
          ph.atoms.push_back({x, y, sigma, amp});
        }
      }
    }
  } else if (kind == PhantomKind::Amorphous) {
    const int n = params.value("n_atoms", 200);
    const double spacing = params.value("min_spacing_A", 2.0);
    const double sigma = params.value("atom_sigma_A", 0.9);
    const double amp = params.value("amplitude_rad", 0.5);
    if (n <= 0 || spacing < 0 || sigma <= 0) throw config_error("amorphous params invalid");
    const double pad = 2.0 * sigma;
    const double lo = pad, hi = ph.extent - pad;
    if (hi <= lo) throw config_error("amorphous: extent too small for padding");
    const long max_tries = 1000L * n;
    long tries = 0;
    while (static_cast<int>(ph.atoms.size()) < n) {
      if (++tries > max_tries) throw numeric_error("packing failed");
      const double x = rng.uniform(lo, hi);
      const double y = rng.uniform(lo, hi);
      bool ok = true;
      for (const auto& at : ph.atoms) {
        if (sq(at.x - x) + sq(at.y - y) < spacing * spacing) {
          ok = false;
          break;
        }
      }
      if (ok) ph.atoms.push_back({x, y, sigma, amp});
    }
  } else {
    if (params.contains("shells")) {
      for (const auto& e : params.at("shells"))
        ph.shells.push_back({e.at(0), e.at(1), e.at(2)});
    } else {
      ph.shells.push_back({params.value("radius_A", ph.extent * 0.15),
                           params.value("thickness_A", ph.extent * 0.02),
                           params.value("amplitude_rad", 0.5)});
    }
    for (const auto& s : ph.shells)
      if (s.radius <= 0 || s.thickness <= 0) throw config_error("blob shell params must be > 0");
  }

  const int np = static_cast<int>(std::round(ph.extent / ph.pixel_size));
  ph.phase = ph.render(np, np, ph.pixel_size);
  check_weak_phase(ph.phase);
  return ph;
}

void ProbeSpec::validate() const {
  if (wavelength <= 0 || aperture_cutoff <= 0 || grid_n <= 0 || sampling <= 0)
    throw config_error("probe spec fields must be > 0");
  const double nyquist = 1.0 / (2.0 * sampling);
  if (aperture_cutoff > nyquist) throw config_error("undersampled probe");
}

std::vector<std::complex<double>> build_probe(const ProbeSpec& spec) {
  spec.validate();
  const int n = spec.grid_n;
  std::vector<std::complex<double>> a(static_cast<size_t>(n) * n);
  // center the real-space probe at (n/2, n/2) via a linear phase ramp
  const double x0 = (n / 2) * spec.sampling;
  for (int i = 0; i < n; ++i) {
    const double kx = fft_freq(i, n) / spec.sampling;
    for (int j = 0; j < n; ++j) {
      const double ky = fft_freq(j, n) / spec.sampling;
      const double k2 = kx * kx + ky * ky;
      if (k2 > spec.aperture_cutoff * spec.aperture_cutoff) continue;
      const double chi = M_PI * spec.wavelength * spec.defocus * k2;
      const double ramp = -2.0 * M_PI * (kx * x0 + ky * x0);
      a[static_cast<size_t>(i) * n + j] = std::polar(1.0, -chi + ramp);
    }
  }
  FftPlan2D ifft(n, n, FFTW_BACKWARD);
  ifft.run(a.data());
  double norm = 0;
  for (const auto& z : a) norm += std::norm(z);
  const double scale = 1.0 / std::sqrt(norm);
  for (auto& z : a) z *= scale;
  return a;
}

SimResult simulate_scan(const Phantom& phantom, const ScanCalibration& calib,
                        std::pair<int, int> scan_shape, const SimOptions& opt) {
  calib.validate();
  if (calib.det_h != calib.det_w)
    throw config_error("simulate_scan: square detector required, got " +
                       std::to_string(calib.det_h) + "x" + std::to_string(calib.det_w));
  const int K = calib.det_h;
  const int b = opt.oversample;
  if (b < 1) throw config_error("simulate_scan: oversample must be >= 1");
  const int n = K * b;
  const auto [H, W] = scan_shape;
  if (H <= 0 || W <= 0) throw config_error("simulate_scan: bad scan shape");

  const double lambda = electron_wavelength(calib.energy);
  const double dtheta = calib.detector_pixel * 1e-3;  // rad
  // Object sampling follows the detector: the binned FFT plane covers
  // exactly K * detector_pixel of scattering angle.
  const double p = lambda / (K * dtheta);

  const double fov_x = H * calib.step_size, fov_y = W * calib.step_size;
  const double win = n * p;
  if (phantom.extent < std::max(fov_x, fov_y) + win + 2 * p)
    throw config_error("geometry mismatch: phantom extent " + std::to_string(phantom.extent) +
                       " A < scan FOV " + std::to_string(std::max(fov_x, fov_y)) +
                       " A + probe window " + std::to_string(win) + " A");

  const double ox = (phantom.extent - fov_x) / 2.0;
  const double oy = (phantom.extent - fov_y) / 2.0;

  // Transmission function on the full object grid.
  const int nobj = static_cast<int>(std::floor(phantom.extent / p));
  ImageF obj_phase = phantom.render(nobj, nobj, p);
  std::vector<std::complex<double>> trans(obj_phase.size());
  for (size_t i = 0; i < trans.size(); ++i)
    trans[i] = std::polar(1.0, static_cast<double>(obj_phase.v[i]));

  ProbeSpec pspec;
  pspec.wavelength = lambda;
  pspec.aperture_cutoff = calib.convergence * 1e-3 / lambda;
  pspec.defocus = calib.defocus;
  pspec.grid_n = n;
  pspec.sampling = p;
  pspec.validate();

  // Aperture with the centering ramp folded in; per-position sub-pixel
  // shifts add a further ramp before the inverse transform.
  std::vector<std::complex<double>> aperture(static_cast<size_t>(n) * n);
  std::vector<double> kxs(n), kys(n);
  for (int i = 0; i < n; ++i) kxs[i] = fft_freq(i, n) / p;
  kys = kxs;
  const double xc = (n / 2) * p;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double k2 = kxs[i] * kxs[i] + kys[j] * kys[j];
      if (k2 > pspec.aperture_cutoff * pspec.aperture_cutoff) continue;
      const double chi = M_PI * lambda * calib.defocus * k2;
      const double ramp = -2.0 * M_PI * (kxs[i] * xc + kys[j] * xc);
      aperture[static_cast<size_t>(i) * n + j] = std::polar(1.0, -chi + ramp);
    }
  }

  FftPlan2D ifft(n, n, FFTW_BACKWARD);
  FftPlan2D fft(n, n, FFTW_FORWARD);

  // Verify the extreme probe windows stay on the object grid.
  for (const double pa : {ox + 0.5 * calib.step_size, ox + fov_x - 0.5 * calib.step_size}) {
    const int s = static_cast<int>(std::lround(pa / p - 0.5)) - n / 2;
    if (s < 0 || s + n > nobj)
      throw config_error("geometry mismatch: probe window [" + std::to_string(s) + ", " +
                         std::to_string(s + n) + ") outside object grid of " +
                         std::to_string(nobj) + " px");
  }

  SimResult res;
  res.cube = DataCube4D(H, W, calib, Layout::RealMajor);
  res.cube.signed_values = false;

  // One specimen-free pattern defines the beam center on the binned grid.
  std::vector<float> vacuum_pattern(static_cast<size_t>(K) * K);

  const size_t npos = static_cast<size_t>(H) * W;
#pragma omp parallel
  {
    std::vector<std::complex<double>> wave(static_cast<size_t>(n) * n);
#pragma omp for schedule(static)
    for (size_t pos = 0; pos <= npos; ++pos) {
      // pos == npos is the vacuum reference
      const bool vacuum = (pos == npos);
      const int rx = vacuum ? 0 : static_cast<int>(pos) / W;
      const int ry = vacuum ? 0 : static_cast<int>(pos) % W;
      const double px_abs = ox + (rx + 0.5) * calib.step_size;
      const double py_abs = oy + (ry + 0.5) * calib.step_size;
      // window start so the probe lands near the window center
      const double ucx = px_abs / p - 0.5, ucy = py_abs / p - 0.5;
      const int sx = static_cast<int>(std::lround(ucx)) - n / 2;
      const int sy = static_cast<int>(std::lround(ucy)) - n / 2;
      const double fracx = (ucx - std::lround(ucx)) * p;
      const double fracy = (ucy - std::lround(ucy)) * p;

      // probe with sub-pixel shift
      for (int i = 0; i < n; ++i) {
        const double rampx = kxs[i] * fracx;
        for (int j = 0; j < n; ++j) {
          const auto& av = aperture[static_cast<size_t>(i) * n + j];
          if (av == std::complex<double>(0.0, 0.0)) {
            wave[static_cast<size_t>(i) * n + j] = 0.0;
            continue;
          }
          wave[static_cast<size_t>(i) * n + j] =
              av * std::polar(1.0, -2.0 * M_PI * (rampx + kys[j] * fracy));
        }
      }
      ifft.run(wave.data());
      double norm = 0;
      for (const auto& z : wave) norm += std::norm(z);
      const double scale = 1.0 / std::sqrt(norm);

      if (vacuum) {
        // skip specimen
      } else {
        for (int i = 0; i < n; ++i) {
          const size_t row = static_cast<size_t>(sx + i) * nobj + sy;
          for (int j = 0; j < n; ++j)
            wave[static_cast<size_t>(i) * n + j] *= trans[row + j];
        }
      }
      for (auto& z : wave) z *= scale;
      fft.run(wave.data());

      // fftshift + block-mean bin onto the detector, then normalize
      float* pat = vacuum ? vacuum_pattern.data() : res.cube.pattern(rx, ry);
      std::fill(pat, pat + static_cast<size_t>(K) * K, 0.0f);
      for (int i = 0; i < n; ++i) {
        const int si = fft_shift_index(i, n);
        for (int j = 0; j < n; ++j) {
          const int sj = fft_shift_index(j, n);
          pat[(si / b) * K + (sj / b)] += static_cast<float>(std::norm(wave[static_cast<size_t>(i) * n + j]));
        }
      }
      double tot = 0;
      for (int i = 0; i < K * K; ++i) tot += pat[i];
      if (tot <= 0) continue;
      const float inv = static_cast<float>(1.0 / tot);
      for (int i = 0; i < K * K; ++i) pat[i] *= inv;
    }
  }

  // Beam center from the vacuum pattern's center of mass.
  {
    double total = 0, cx = 0, cy = 0;
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        const double v = vacuum_pattern[static_cast<size_t>(i) * K + j];
        total += v;
        cx += v * i;
        cy += v * j;
      }
    if (total > 0) {
      res.cube.calib.center_x = cx / total;
      res.cube.calib.center_y = cy / total;
    }
  }

  const int r = opt.upscale;
  res.ground_truth = phantom.render(r * H, r * W, calib.step_size / r, ox, oy);
  return res;
}

} // namespace misr4d
