#ifndef MISR4D_DATACUBE_HPP
#define MISR4D_DATACUBE_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "misr4d/common.hpp"

namespace misr4d {

/// Acquisition metadata for one 4D-STEM scan.
struct ScanCalibration {
  double step_size = 4.0;       ///< Å per scan position
  double energy = 300.0;        ///< beam energy, keV
  double convergence = 10.0;    ///< probe semi-angle, mrad
  double defocus = 1500.0;      ///< Å
  double detector_pixel = 1.0;  ///< mrad per detector pixel
  int det_h = 64, det_w = 64;   ///< detector shape (Kx, Ky)
  double center_x = 31.5;       ///< unscattered-beam center, fractional pixel
  double center_y = 31.5;

  void validate() const;
};

enum class Layout : uint8_t {
  RealMajor,   ///< (Rx, Ry, Qx, Qy)
  RecipMajor,  ///< (Qx, Qy, Rx, Ry)
};

/// The 4-D measurement: a full diffraction pattern per scan position.
/// Values are counts (post-dose) or intensities (clean); `signed_values`
/// marks cubes that may hold negatives after Gaussian corruption.
/// Immutable by convention after construction; the free functions below are
/// pure and return new cubes.
struct DataCube4D {
  Layout layout = Layout::RealMajor;
  bool signed_values = false;
  int scan_h = 0, scan_w = 0;
  ScanCalibration calib;
  std::vector<float> values;  // contiguous; leading pair of axes set by layout

  DataCube4D() = default;
  DataCube4D(int scan_h_, int scan_w_, const ScanCalibration& c,
             Layout layout_ = Layout::RealMajor);

  size_t size() const { return values.size(); }
  int det_h() const { return calib.det_h; }
  int det_w() const { return calib.det_w; }
  size_t pattern_px() const { return static_cast<size_t>(det_h()) * det_w(); }
  size_t n_patterns() const { return static_cast<size_t>(scan_h) * scan_w; }

  /// Pointer to the diffraction pattern at scan position (rx, ry).
  /// Only valid for RealMajor cubes.
  float* pattern(int rx, int ry);
  const float* pattern(int rx, int ry) const;

  /// Logical element access independent of layout.
  float at(int rx, int ry, int qx, int qy) const;
  float& at(int rx, int ry, int qx, int qy);

  void check_consistent() const;
};

/// Reorders (Rx,Ry,Qx,Qy) <-> (Qx,Qy,Rx,Ry) as a materialized copy.
/// Bit-exact involution; calibration carried unchanged.
DataCube4D transpose_domains(const DataCube4D& cube);

/// Intensity center of mass of the probe-position-averaged pattern, in
/// fractional detector pixels. Throws numeric_error("empty datacube") on an
/// all-zero cube.
std::array<double, 2> estimate_center(const DataCube4D& cube);

/// Circularly shifts every pattern by the integer part of (target - current
/// center) and bilinearly by the fractional part, then updates calib.center.
DataCube4D recenter(const DataCube4D& cube, std::array<double, 2> target);

/// Resamples every pattern under a 2x3 affine map (coordinates taken
/// relative to calib.center) with bilinear interpolation; out-of-bounds
/// samples are zero. matrix = {a00, a01, t0, a10, a11, t1}.
DataCube4D apply_affine(const DataCube4D& cube, const std::array<double, 6>& matrix);

} // namespace misr4d

#endif
