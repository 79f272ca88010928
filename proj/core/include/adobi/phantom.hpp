#pragma once

#include <cstdint>
#include <utility>

#include "adobi/core_types.hpp"
#include "adobi/denoiser.hpp"

namespace adobi {

// Synthetic ground-truth slice: a centered background disk plus random
// ellipses, anti-aliased, with a seeded complex phase ramp. Max magnitude is
// normalized to 1. Deterministic in the seed.
struct PhantomSpec {
  int size = 64;
  int n_ellipses = 6;
  double intensity_min = 0.25;
  double intensity_max = 1.0;
  double phase_ramp = 1.5;  // scales the seeded linear phase, radians across the field
  std::uint64_t seed = 0;
};

ComplexImage make_phantom(const PhantomSpec& spec);

// Smooth coil rig: Gaussian bumps centered on a ring with seeded smooth
// phases, plus a perturbed copy standing in for maps estimated from limited
// calibration data. perturbation_seed varies the error field independently
// of the rig geometry.
struct CoilModelSpec {
  int n_coils = 8;
  double ring_radius = 0.6;    // in normalized [-1, 1] coordinates
  double bump_width = 0.55;
  double phase_amplitude = 0.6;
  bool normalize = true;       // RSS-normalize; otherwise scale so max RSS = 1
  int bandlimit = 0;           // > 0: project maps onto +-bandlimit harmonics
  double perturbation = 0.1;   // relative amplitude of the initial-map error
  std::uint64_t seed = 0;
  std::uint64_t perturbation_seed = 0;
};

struct CoilSet {
  SensitivityMaps true_maps;
  SensitivityMaps initial_maps;
};

CoilSet make_coils(const CoilModelSpec& spec, int height, int width);

// Frequency-diagonal Gaussian toy: smooth spectra with a controllable
// clean/source correlation. spectrum_tilt keeps the per-frequency gain
// within reach of a small patch kernel.
struct GaussianPairSpec {
  int height = 32;
  int width = 32;
  double signal_power = 1.0;
  double spectrum_tilt = 0.3;   // in [0, 1)
  double source_extra = 0.25;   // extra source variance, fraction of var0
  double correlation = 0.85;    // |cov| / sqrt(var0 varz), in [0, 1)
  double mean_scale = 0.0;      // 0 = zero-mean model
  std::uint64_t seed = 0;
};

GaussianPairModel make_gaussian_pair_model(const GaussianPairSpec& spec);

}  // namespace adobi
