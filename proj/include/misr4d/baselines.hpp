#ifndef MISR4D_BASELINES_HPP
#define MISR4D_BASELINES_HPP

#include <array>
#include <vector>

#include "misr4d/datacube.hpp"
#include "misr4d/multiview.hpp"

namespace misr4d {

/// Masked per-pattern intensity sum assigned to each probe position.
ImageF bf_sum(const DataCube4D& cube, const std::vector<uint8_t>& mask);

/// Bicubic (Catmull-Rom) resampling to (oh, ow), optionally sampling the
/// source displaced by (shift_x, shift_y) source pixels. Border replicated.
ImageF resample_bicubic(const ImageF& img, int oh, int ow, double shift_x = 0.0,
                        double shift_y = 0.0);

/// Per-position center-of-mass deflections in mrad relative to
/// calib.center. Positions with empty patterns get zero and are counted.
struct ComMap {
  ImageF com_x, com_y;
  int empty_patterns = 0;
};
ComMap center_of_mass(const DataCube4D& cube);

/// Integrated differential phase contrast: Fourier integration of the CoM
/// field with the zero-frequency term removed; output is mean-subtracted.
ImageF idpc(const DataCube4D& cube);

/// Sub-pixel displacement of `a` relative to `b` (a(x) ~ b(x - s)) via
/// phase cross-correlation with 10x upsampled peak localization. Optionally
/// reports the correlation peak height in [0, 1].
std::array<double, 2> phase_correlation_shift(const ImageF& a, const ImageF& b,
                                              double* peak = nullptr);

struct ParallaxResult {
  ImageF image;                                  // (r*H, r*W)
  std::vector<std::array<double, 2>> shifts;     // measured, scan px, per view
  std::vector<std::array<float, 2>> angles;      // view angles, mrad
  std::vector<uint8_t> used;                     // 0 = excluded (low confidence)
  int axial_view = 0;
  double confidence_threshold = 0.0;
};

/// Rigid alignment-and-sum of the views against the axial (smallest-angle)
/// view, resampled onto the upscaled grid.
ParallaxResult parallax(const ViewStack& stack, int upscale,
                        double confidence_threshold = 0.02);

} // namespace misr4d

#endif
