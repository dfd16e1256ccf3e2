#include "misr4d/multiview.hpp"

#include <cmath>

namespace misr4d {

std::vector<uint8_t> bf_mask(const ScanCalibration& calib, double radius_fraction) {
  calib.validate();
  if (!(radius_fraction > 0) || radius_fraction > 1.0)
    throw config_error("bf_mask: radius_fraction must be in (0, 1]");
  const double rmax = radius_fraction * calib.convergence;  // mrad
  std::vector<uint8_t> mask(static_cast<size_t>(calib.det_h) * calib.det_w, 0);
  size_t count = 0;
  for (int qx = 0; qx < calib.det_h; ++qx) {
    for (int qy = 0; qy < calib.det_w; ++qy) {
      const double tx = (qx - calib.center_x) * calib.detector_pixel;
      const double ty = (qy - calib.center_y) * calib.detector_pixel;
      if (tx * tx + ty * ty <= rmax * rmax) {
        mask[static_cast<size_t>(qx) * calib.det_w + qy] = 1;
        ++count;
      }
    }
  }
  if (count == 0) throw numeric_error("no bright-field pixels");
  return mask;
}

std::vector<std::array<int, 2>> view_blocks(const std::vector<uint8_t>& mask, int det_h,
                                            int det_w, int bin) {
  if (bin < 1) throw config_error("view_blocks: bin must be >= 1");
  if (mask.size() != static_cast<size_t>(det_h) * det_w)
    throw config_error("view_blocks: mask does not fit detector shape");
  std::vector<std::array<int, 2>> blocks;
  for (int bx = 0; bx + bin <= det_h; bx += bin) {
    for (int by = 0; by + bin <= det_w; by += bin) {
      bool full = true;
      for (int i = bx; i < bx + bin && full; ++i)
        for (int j = by; j < by + bin; ++j)
          if (!mask[static_cast<size_t>(i) * det_w + j]) {
            full = false;
            break;
          }
      if (full) blocks.push_back({bx, by});
    }
  }
  return blocks;
}

ViewStack extract_views(const DataCube4D& cube, const std::vector<uint8_t>& mask, int bin) {
  if (cube.layout != Layout::RealMajor)
    throw config_error("extract_views: cube must be REAL_MAJOR");
  cube.check_consistent();
  const int dh = cube.det_h(), dw = cube.det_w();
  const auto blocks = view_blocks(mask, dh, dw, bin);
  if (blocks.empty()) throw config_error("binning eliminates all views");

  ViewStack st;
  st.v = static_cast<int>(blocks.size());
  st.h = cube.scan_h;
  st.w = cube.scan_w;
  st.calib = cube.calib;
  st.bin = bin;
  st.views.assign(static_cast<size_t>(st.v) * st.h * st.w, 0.0f);
  st.angles.reserve(blocks.size());
  for (const auto& [bx, by] : blocks) {
    const double cx = bx + (bin - 1) / 2.0, cy = by + (bin - 1) / 2.0;
    st.angles.push_back({static_cast<float>((cx - cube.calib.center_x) * cube.calib.detector_pixel),
                         static_cast<float>((cy - cube.calib.center_y) * cube.calib.detector_pixel)});
  }

  const size_t hw = static_cast<size_t>(st.h) * st.w;
  for (size_t p = 0; p < hw; ++p) {
    const float* pat = cube.values.data() + p * cube.pattern_px();
    for (size_t k = 0; k < blocks.size(); ++k) {
      const auto& [bx, by] = blocks[k];
      double s = 0;
      for (int i = bx; i < bx + bin; ++i)
        for (int j = by; j < by + bin; ++j) s += pat[static_cast<size_t>(i) * dw + j];
      st.views[k * hw + p] = static_cast<float>(s);
    }
  }
  return st;
}

ViewStack normalize_views(const ViewStack& stack) {
  if (stack.normalization == ViewNorm::PerViewMean) return stack;
  ViewStack out = stack;
  const size_t hw = static_cast<size_t>(stack.h) * stack.w;
  for (int k = 0; k < stack.v; ++k) {
    double mean = 0;
    const float* src = stack.view(k);
    for (size_t i = 0; i < hw; ++i) mean += src[i];
    mean /= static_cast<double>(hw);
    if (!(mean > 0)) throw numeric_error("dead view");
    float* dst = out.view(k);
    const float inv = static_cast<float>(1.0 / mean);
    for (size_t i = 0; i < hw; ++i) dst[i] = src[i] * inv;
  }
  out.normalization = ViewNorm::PerViewMean;
  return out;
}

} // namespace misr4d
