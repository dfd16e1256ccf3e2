#ifndef MISR4D_CORRUPTION_HPP
#define MISR4D_CORRUPTION_HPP

#include <cstdint>
#include <limits>

#include "misr4d/datacube.hpp"
#include "misr4d/rng.hpp"

namespace misr4d {

/// One corruption draw: electron dose plus detector read noise and offset.
struct DoseSpec {
  double dose = std::numeric_limits<double>::infinity();  ///< e-/Å^2; +inf = noise-free
  double gaussian_sigma = 0.0;                            ///< counts
  double bias = 0.0;                                      ///< counts
  uint64_t seed = 0;

  bool infinite() const { return !(dose < std::numeric_limits<double>::infinity()); }
  void validate() const;
};

/// Ranges for the per-epoch on-the-fly sampler.
struct CorruptionConfig {
  double dose_min = 100.0, dose_max = 1000.0;  ///< e-/Å^2
  double sigma_max = 0.0;
  double bias_max = 0.0;
  uint64_t seed = 0;

  void validate() const;
};

/// Corrupts one clean unit-flux intensity value. Each pixel owns an
/// independent RNG stream (pixel_seed), so corrupting any subset of pixels
/// reproduces exactly the values the full-cube path would produce.
float corrupt_value(float clean, double electrons_per_pattern, const DoseSpec& spec,
                    uint64_t pixel_seed);

/// Seed of the RNG stream for the pixel at logical REAL_MAJOR position
/// (rx, ry, qx, qy).
inline uint64_t pixel_stream_seed(const DoseSpec& spec, size_t linear_index) {
  return derive_seed(spec.seed, linear_index);
}

/// Poisson shot noise at the given dose (electrons per pattern =
/// dose * step_size^2), then optional Gaussian noise and bias. Requires a
/// clean REAL_MAJOR cube whose patterns each sum to 1 within 1e-6.
/// dose = inf returns the scaled clean intensities with no randomness.
DataCube4D apply_dose(const DataCube4D& cube, const DoseSpec& spec);

/// Deterministic draw for (epoch, sample index) from the configured ranges:
/// dose log-uniform in [dose_min, dose_max], sigma and bias uniform.
DoseSpec sample_corruption(uint64_t epoch, uint64_t index, const CorruptionConfig& cfg);

} // namespace misr4d

#endif
