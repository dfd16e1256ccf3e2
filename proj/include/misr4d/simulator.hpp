#ifndef MISR4D_SIMULATOR_HPP
#define MISR4D_SIMULATOR_HPP

#include <complex>
#include <cstdint>
#include <utility>
#include <vector>

#include "misr4d/common.hpp"
#include "misr4d/datacube.hpp"

#include "json.hpp"

namespace misr4d {

/// Relativistic electron wavelength in Å for a beam energy in keV.
double electron_wavelength(double energy_kev);

enum class PhantomKind : uint8_t { Crystal, Amorphous, Blob };

PhantomKind phantom_kind_from_string(const std::string& s);
std::string to_string(PhantomKind k);

/// A parametric specimen: an analytic projected-phase model plus its
/// rasterization on a supersampled grid. The analytic form (Gaussian bumps
/// for atoms, Gaussian ring profiles for shells) lets the same object be
/// rendered at the simulation sampling and at the ground-truth sampling
/// without resampling error.
struct Phantom {
  struct Atom {
    double x, y;     // Å, in field coordinates
    double sigma;    // Å
    double amplitude;  // rad
  };
  struct Shell {
    double radius;     // Å
    double thickness;  // Å (Gaussian sigma of the ring profile)
    double amplitude;  // rad
  };

  PhantomKind kind = PhantomKind::Crystal;
  uint64_t seed = 0;
  double extent = 256.0;  // Å, square field [0, extent)^2
  std::vector<Atom> atoms;
  std::vector<Shell> shells;  // centered at (extent/2, extent/2)

  ImageF phase;       // rasterized at construction
  double pixel_size;  // Å per phase pixel

  /// Rasterizes the analytic phase over [x0, x0+h*px) x [y0, y0+w*px),
  /// sampling at pixel centers.
  ImageF render(int h, int w, double px, double x0 = 0.0, double y0 = 0.0) const;
};

/// Builds a phantom from a JSON params object. Common keys: "extent_A"
/// (field size), "pixel_size_A" (raster sampling). Kind-specific keys:
///   crystal:   lattice_a_A, lattice_b_A [=a], angle_deg [=90],
///              atom_sigma_A, amplitude_rad, basis [[fx,fy],...], jitter_A
///   amorphous: n_atoms, min_spacing_A, atom_sigma_A, amplitude_rad
///   blob:      shells [[radius_A, thickness_A, amplitude_rad],...]
/// Deterministic given seed. Throws config_error on bad params or if the
/// rendered |phase| exceeds 1 rad (weak-phase validity), and
/// numeric_error("packing failed") if amorphous placement cannot satisfy
/// min spacing.
Phantom make_phantom(PhantomKind kind, const nlohmann::json& params, uint64_t seed);

/// Probe-forming optics for one simulation.
struct ProbeSpec {
  double wavelength;       // Å
  double aperture_cutoff;  // Å^-1, = convergence / wavelength
  double defocus;          // Å
  int grid_n;              // probe window is grid_n x grid_n
  double sampling;         // Å per pixel of the probe window

  void validate() const;
};

/// Aberrated aperture transformed to a real-space probe, normalized so
/// sum |psi|^2 = 1. Row-major grid_n x grid_n, probe centered at
/// (grid_n/2, grid_n/2). Throws config_error("undersampled probe") if the
/// aperture cutoff exceeds the grid Nyquist frequency.
std::vector<std::complex<double>> build_probe(const ProbeSpec& spec);

struct SimOptions {
  int oversample = 4;  ///< simulation pixels per detector pixel (window = K * oversample)
  int upscale = 3;     ///< ground-truth supersampling r
};

struct SimResult {
  DataCube4D cube;     // clean, unit-flux patterns, REAL_MAJOR
  ImageF ground_truth; // phantom phase at (r*H, r*W) over the scan field of view
};

/// Rasters a defocused probe over scan_shape positions and records the
/// far-field intensity on the detector described by calib. Single-slice
/// weak-phase forward model: exit wave = probe * exp(i*phase), one FFT per
/// probe position, block-mean binned onto the detector, each pattern
/// normalized to unit total intensity. calib.center is set to the actual
/// beam center of the binned grid. Deterministic.
SimResult simulate_scan(const Phantom& phantom, const ScanCalibration& calib,
                        std::pair<int, int> scan_shape, const SimOptions& opt = {});

} // namespace misr4d

#endif
