#include "misr4d/corruption.hpp"

#include <cmath>
#include <random>

namespace misr4d {

void DoseSpec::validate() const {
  if (!(dose > 0)) throw config_error("dose must be > 0 (or inf)");
  if (gaussian_sigma < 0) throw config_error("gaussian_sigma must be >= 0");
}

void CorruptionConfig::validate() const {
  if (!(dose_min > 0)) throw config_error("corruption: dose_min must be > 0");
  if (dose_min > dose_max) throw config_error("corruption: dose_min > dose_max");
  if (std::isinf(dose_max) && !std::isinf(dose_min))
    throw config_error("corruption: open-ended dose range; use dose_min = dose_max = inf");
  if (sigma_max < 0 || bias_max < 0)
    throw config_error("corruption: sigma_max and bias_max must be >= 0");
}

float corrupt_value(float clean, double electrons_per_pattern, const DoseSpec& spec,
                    uint64_t pixel_seed) {
  SplitMix64 g(pixel_seed);
  double v;
  if (spec.infinite()) {
    v = clean;
  } else {
    const double mean = electrons_per_pattern * std::max(0.0f, clean);
    if (mean <= 0) {
      v = 0.0;
    } else {
      std::poisson_distribution<long long> pd(mean);
      v = static_cast<double>(pd(g));
    }
  }
  if (spec.gaussian_sigma > 0) {
    std::normal_distribution<double> nd(spec.bias, spec.gaussian_sigma);
    v += nd(g);
  } else if (spec.bias != 0) {
    v += spec.bias;
  }
  return static_cast<float>(v);
}

DataCube4D apply_dose(const DataCube4D& cube, const DoseSpec& spec) {
  spec.validate();
  if (cube.layout != Layout::RealMajor) throw config_error("apply_dose: cube must be REAL_MAJOR");
  const size_t ppx = cube.pattern_px();
  for (size_t p = 0; p < cube.n_patterns(); ++p) {
    const float* pat = cube.values.data() + p * ppx;
    double tot = 0;
    for (size_t i = 0; i < ppx; ++i) tot += pat[i];
    if (std::abs(tot - 1.0) > 1e-6) throw config_error("expected unit-flux cube");
  }

  const double ne = spec.infinite() ? 1.0 : spec.dose * sq(cube.calib.step_size);
  DataCube4D out = cube;
  out.signed_values = spec.gaussian_sigma > 0;

  const long long total = static_cast<long long>(cube.values.size());
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < total; ++i) {
    out.values[i] = corrupt_value(cube.values[i], ne, spec,
                                  pixel_stream_seed(spec, static_cast<size_t>(i)));
  }
  return out;
}

DoseSpec sample_corruption(uint64_t epoch, uint64_t index, const CorruptionConfig& cfg) {
  cfg.validate();
  SplitMix64 g(derive_seed(cfg.seed, epoch, index));
  DoseSpec spec;
  if (cfg.dose_min == cfg.dose_max) {
    spec.dose = cfg.dose_min;
    g();  // keep stream layout identical to the non-degenerate case
  } else {
    spec.dose = std::exp(g.uniform(std::log(cfg.dose_min), std::log(cfg.dose_max)));
  }
  spec.gaussian_sigma = cfg.sigma_max > 0 ? g.uniform(0.0, cfg.sigma_max) : 0.0;
  spec.bias = cfg.bias_max > 0 ? g.uniform(0.0, cfg.bias_max) : 0.0;
  spec.seed = derive_seed(cfg.seed, epoch * 0x10001ULL + 1, index);
  return spec;
}

} // namespace misr4d
