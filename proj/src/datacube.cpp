#include "misr4d/datacube.hpp"

#include <algorithm>
#include <cmath>

namespace misr4d {

void ScanCalibration::validate() const {
  if (step_size <= 0) throw config_error("calibration: step_size must be > 0");
  if (energy <= 0) throw config_error("calibration: energy must be > 0");
  if (convergence <= 0) throw config_error("calibration: convergence must be > 0");
  if (detector_pixel <= 0) throw config_error("calibration: detector_pixel must be > 0");
  if (det_h <= 0 || det_w <= 0) throw config_error("calibration: detector shape must be positive");
  if (center_x < 0 || center_x >= det_h || center_y < 0 || center_y >= det_w)
    throw config_error("calibration: center outside detector");
}

DataCube4D::DataCube4D(int scan_h_, int scan_w_, const ScanCalibration& c, Layout layout_)
    : layout(layout_), scan_h(scan_h_), scan_w(scan_w_), calib(c) {
  calib.validate();
  if (scan_h <= 0 || scan_w <= 0) throw config_error("datacube: scan shape must be positive");
  values.assign(n_patterns() * pattern_px(), 0.0f);
}

float* DataCube4D::pattern(int rx, int ry) {
  return values.data() + (static_cast<size_t>(rx) * scan_w + ry) * pattern_px();
}

const float* DataCube4D::pattern(int rx, int ry) const {
  return values.data() + (static_cast<size_t>(rx) * scan_w + ry) * pattern_px();
}

float DataCube4D::at(int rx, int ry, int qx, int qy) const {
  if (layout == Layout::RealMajor)
    return values[((static_cast<size_t>(rx) * scan_w + ry) * det_h() + qx) * det_w() + qy];
  return values[((static_cast<size_t>(qx) * det_w() + qy) * scan_h + rx) * scan_w + ry];
}

float& DataCube4D::at(int rx, int ry, int qx, int qy) {
  if (layout == Layout::RealMajor)
    return values[((static_cast<size_t>(rx) * scan_w + ry) * det_h() + qx) * det_w() + qy];
  return values[((static_cast<size_t>(qx) * det_w() + qy) * scan_h + rx) * scan_w + ry];
}

void DataCube4D::check_consistent() const {
  calib.validate();
  if (values.size() != n_patterns() * pattern_px())
    throw config_error("datacube: value count inconsistent with shape");
}

DataCube4D transpose_domains(const DataCube4D& cube) {
  cube.check_consistent();
  DataCube4D out;
  out.layout = (cube.layout == Layout::RealMajor) ? Layout::RecipMajor : Layout::RealMajor;
  out.signed_values = cube.signed_values;
  out.scan_h = cube.scan_h;
  out.scan_w = cube.scan_w;
  out.calib = cube.calib;
  out.values.resize(cube.values.size());

  const int sh = cube.scan_h, sw = cube.scan_w, dh = cube.det_h(), dw = cube.det_w();
  // Raw copy: leading pair (a,b) of the input becomes trailing pair of the output.
  const size_t lead = (cube.layout == Layout::RealMajor) ? static_cast<size_t>(sh) * sw
                                                         : static_cast<size_t>(dh) * dw;
  const size_t trail = cube.values.size() / lead;
  for (size_t a = 0; a < lead; ++a)
    for (size_t b = 0; b < trail; ++b)
      out.values[b * lead + a] = cube.values[a * trail + b];
  return out;
}

std::array<double, 2> estimate_center(const DataCube4D& cube) {
  if (cube.layout != Layout::RealMajor)
    throw config_error("estimate_center: cube must be REAL_MAJOR");
  const int dh = cube.det_h(), dw = cube.det_w();
  std::vector<double> mean(static_cast<size_t>(dh) * dw, 0.0);
  for (size_t p = 0; p < cube.n_patterns(); ++p) {
    const float* pat = cube.values.data() + p * cube.pattern_px();
    for (size_t i = 0; i < mean.size(); ++i) mean[i] += pat[i];
  }
  double total = 0, sx = 0, sy = 0;
  for (int qx = 0; qx < dh; ++qx)
    for (int qy = 0; qy < dw; ++qy) {
      const double v = mean[static_cast<size_t>(qx) * dw + qy];
      total += v;
      sx += v * qx;
      sy += v * qy;
    }
  if (total <= 0) throw numeric_error("empty datacube");
  return {sx / total, sy / total};
}

namespace {

// Circular shift by integer (si,sj) plus bilinear shift by fractional
// (fi,fj) in [0,1). Bilinear neighbors wrap, so flux is preserved.
void shift_pattern(const float* in, float* out, int h, int w, int si, int sj, double fi,
                   double fj) {
  const double w00 = (1 - fi) * (1 - fj), w01 = (1 - fi) * fj, w10 = fi * (1 - fj),
               w11 = fi * fj;
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      // output pixel (i,j) pulls from input at (i - shift), bilinear
      const int i0 = ((i - si) % h + h) % h;
      const int j0 = ((j - sj) % w + w) % w;
      const int i1 = (i0 - 1 + h) % h;
      const int j1 = (j0 - 1 + w) % w;
      out[i * w + j] = static_cast<float>(w00 * in[i0 * w + j0] + w01 * in[i0 * w + j1] +
                                          w10 * in[i1 * w + j0] + w11 * in[i1 * w + j1]);
    }
  }
}

} // namespace

DataCube4D recenter(const DataCube4D& cube, std::array<double, 2> target) {
  if (cube.layout != Layout::RealMajor) throw config_error("recenter: cube must be REAL_MAJOR");
  const auto current = estimate_center(cube);
  const double dx = target[0] - current[0];
  const double dy = target[1] - current[1];
  const int dh = cube.det_h(), dw = cube.det_w();
  if (std::abs(dx) > dh / 2.0 || std::abs(dy) > dw / 2.0)
    throw config_error("center out of range");

  const int si = static_cast<int>(std::floor(dx));
  const int sj = static_cast<int>(std::floor(dy));
  const double fi = dx - si, fj = dy - sj;

  DataCube4D out = cube;
  for (size_t p = 0; p < cube.n_patterns(); ++p) {
    const float* src = cube.values.data() + p * cube.pattern_px();
    float* dst = out.values.data() + p * cube.pattern_px();
    shift_pattern(src, dst, dh, dw, si, sj, fi, fj);
  }
  out.calib.center_x = target[0];
  out.calib.center_y = target[1];
  return out;
}

DataCube4D apply_affine(const DataCube4D& cube, const std::array<double, 6>& m) {
  if (cube.layout != Layout::RealMajor)
    throw config_error("apply_affine: cube must be REAL_MAJOR");
  const double det = m[0] * m[4] - m[1] * m[3];
  if (std::abs(det) < 1e-12) throw config_error("degenerate affine");
  // inverse of the 2x2 part
  const double i00 = m[4] / det, i01 = -m[1] / det, i10 = -m[3] / det, i11 = m[0] / det;

  const int dh = cube.det_h(), dw = cube.det_w();
  const double cx = cube.calib.center_x, cy = cube.calib.center_y;
  DataCube4D out = cube;
  for (size_t p = 0; p < cube.n_patterns(); ++p) {
    const float* src = cube.values.data() + p * cube.pattern_px();
    float* dst = out.values.data() + p * cube.pattern_px();
    for (int qx = 0; qx < dh; ++qx) {
      for (int qy = 0; qy < dw; ++qy) {
        // pull: source coordinate = A^-1 (q - t), both relative to center
        const double ux = qx - cx - m[2];
        const double uy = qy - cy - m[5];
        const double sx = i00 * ux + i01 * uy + cx;
        const double sy = i10 * ux + i11 * uy + cy;
        const int x0 = static_cast<int>(std::floor(sx));
        const int y0 = static_cast<int>(std::floor(sy));
        const double fx = sx - x0, fy = sy - y0;
        double acc = 0;
        for (int dx2 = 0; dx2 <= 1; ++dx2) {
          for (int dy2 = 0; dy2 <= 1; ++dy2) {
            const int xi = x0 + dx2, yi = y0 + dy2;
            if (xi < 0 || xi >= dh || yi < 0 || yi >= dw) continue;
            const double wgt = (dx2 ? fx : 1 - fx) * (dy2 ? fy : 1 - fy);
            acc += wgt * src[xi * dw + yi];
          }
        }
        dst[qx * dw + qy] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

} // namespace misr4d
