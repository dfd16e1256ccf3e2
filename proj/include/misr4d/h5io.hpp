#ifndef MISR4D_H5IO_HPP
#define MISR4D_H5IO_HPP

#include <optional>
#include <string>

#include "misr4d/datacube.hpp"
#include "misr4d/multiview.hpp"

namespace misr4d {

/// One HDF5 container per datacube: dataset /datacube (float32) with the
/// calibration carried as attributes (layout "RQ"|"QR", step_size_A,
/// energy_keV, convergence_mrad, defocus_A, detector_pixel_mrad, center_x,
/// center_y, signed), plus optional /ground_truth (float32, (rH, rW)) and
/// /views (float32, (V,H,W)) with /view_angles_mrad (float32, (V,2)).
void write_container(const std::string& path, const DataCube4D& cube,
                     const ImageF* ground_truth = nullptr, const ViewStack* views = nullptr);

struct Container {
  DataCube4D cube;
  std::optional<ImageF> ground_truth;
  std::optional<ViewStack> views;
};

Container read_container(const std::string& path, bool load_cube = true);

void write_image_h5(const std::string& path, const ImageF& img, const std::string& dataset);

} // namespace misr4d

#endif
