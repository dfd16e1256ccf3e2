#ifndef MISR4D_MULTIVIEW_HPP
#define MISR4D_MULTIVIEW_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "misr4d/datacube.hpp"

namespace misr4d {

enum class ViewNorm : uint8_t { Raw, PerViewMean };

/// A stack of virtual bright-field images, one per detector cell, each tied
/// to the scattering angle of its cell. This is the network input.
struct ViewStack {
  int v = 0, h = 0, w = 0;
  std::vector<float> views;                    // (V, H, W) row-major
  std::vector<std::array<float, 2>> angles;    // (theta_x, theta_y) mrad, relative to center
  ScanCalibration calib;
  ViewNorm normalization = ViewNorm::Raw;
  int bin = 1;
  double radius_fraction = 1.0;

  float* view(int k) { return views.data() + static_cast<size_t>(k) * h * w; }
  const float* view(int k) const { return views.data() + static_cast<size_t>(k) * h * w; }
};

/// Boolean detector mask: true where the pixel's scattering angle from
/// calib.center is at most radius_fraction * convergence. Throws
/// numeric_error("no bright-field pixels") if empty.
std::vector<uint8_t> bf_mask(const ScanCalibration& calib, double radius_fraction);

/// Detector cells that survive masking and binning: bin x bin blocks fully
/// inside the mask, enumerated row-major over the block grid. A pure
/// function of (mask shape, bin); exposed so view count can be predicted.
std::vector<std::array<int, 2>> view_blocks(const std::vector<uint8_t>& mask, int det_h,
                                            int det_w, int bin);

/// Sums each surviving bin x bin detector block across all scan positions,
/// producing one image per block. Equivalent to transposing domains and
/// slicing the leading axes. Throws config_error("binning eliminates all
/// views") when nothing survives.
ViewStack extract_views(const DataCube4D& cube, const std::vector<uint8_t>& mask, int bin);

/// Divides each view by its own mean. Throws numeric_error("dead view") on
/// a view with non-positive mean.
ViewStack normalize_views(const ViewStack& stack);

} // namespace misr4d

#endif
