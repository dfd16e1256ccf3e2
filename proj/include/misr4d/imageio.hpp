#ifndef MISR4D_IMAGEIO_HPP
#define MISR4D_IMAGEIO_HPP

#include <string>
#include <vector>

#include "misr4d/common.hpp"

namespace misr4d {

/// Single-strip uncompressed 32-bit float grayscale TIFF.
void write_tiff_f32(const std::string& path, const ImageF& img);
ImageF read_tiff_f32(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

} // namespace misr4d

#endif
