#ifndef MISR4D_METRICS_HPP
#define MISR4D_METRICS_HPP

#include <array>
#include <vector>

#include "misr4d/common.hpp"

namespace misr4d {

/// 10 log10(range^2 / MSE) with range from the target; +inf for identical
/// images. Throws numeric_error on a constant target.
double psnr(const ImageF& pred, const ImageF& target);

/// Single-scale SSIM (11x11 Gaussian window, sigma 1.5, K1 = 0.01,
/// K2 = 0.03, dynamic range from the target), mean over the valid map.
double ssim(const ImageF& pred, const ImageF& target);

/// (mean(signal) - mean(background)) / std(background), population std.
double cnr(const ImageF& img, const std::vector<uint8_t>& signal_mask,
           const std::vector<uint8_t>& background_mask);

/// Bilinear samples at n equally spaced points from p0 to p1 (inclusive),
/// coordinates in pixels.
std::vector<double> line_profile(const ImageF& img, std::array<double, 2> p0,
                                 std::array<double, 2> p1, int n_samples);

struct SpectralResult {
  double cutoff = 0.0;          ///< Å^-1
  bool floor_dominated = false; ///< power is flat down to the noise floor
  double noise_floor = 0.0;
  std::vector<double> freq;     ///< bin centers, Å^-1
  std::vector<double> power;    ///< radially averaged |FFT|^2
};

/// Radially averaged power spectrum of (img - mean); the cutoff is the
/// highest frequency whose smoothed power stays at least floor_factor times
/// the outer-band median floor.
SpectralResult spectral_cutoff(const ImageF& img, double pixel_size, double floor_factor = 3.0);

double pearson(const ImageF& a, const ImageF& b);

/// Least-squares (a, b) so that a*src + b approximates dst. Used to put
/// reconstructions with arbitrary intensity units on the target's scale
/// before scoring.
std::array<double, 2> affine_fit(const ImageF& src, const ImageF& dst);
ImageF apply_affine_fit(const ImageF& src, const ImageF& dst);

/// Signal = top-quartile pixels of the reference, background = bottom
/// quartile; the standard masks for CNR scoring against ground truth.
void quartile_masks(const ImageF& reference, std::vector<uint8_t>& signal,
                    std::vector<uint8_t>& background);

} // namespace misr4d

#endif
