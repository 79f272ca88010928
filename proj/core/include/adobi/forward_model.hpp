#pragma once

#include <cstdint>

#include "adobi/core_types.hpp"

namespace adobi {

enum class MaskStyle {
  kRandom,      // seeded uniform choice of non-ACS columns, exact column budget
  kEquispaced,  // every acceleration-th column plus the ACS block
};

// Multi-coil measurement operator y_i = P F (S_i * x) with unitary F and a
// column projection P. With normalized maps the operator norm is <= 1, which
// is what gives the consistency step its stepsize range. Immutable; forward
// and adjoint are pure. The adjoint accumulates coils in fixed order, so
// results do not depend on scheduling.
class ForwardOperator {
 public:
  ForwardOperator(SensitivityMaps maps, SamplingMask mask);

  MultiCoilKSpace forward(const ComplexImage& x) const;
  ComplexImage adjoint(const MultiCoilKSpace& y) const;
  ComplexImage normal(const ComplexImage& x) const;  // A^H A x

  // ||y - A x||_2
  double data_residual(const ComplexImage& x, const MultiCoilKSpace& y) const;

  // Power iteration on A^H A; returns an estimate of ||A|| from below.
  double operator_norm_estimate(int iterations = 50, std::uint64_t seed = 0) const;

  const SensitivityMaps& maps() const { return maps_; }
  const SamplingMask& mask() const { return mask_; }

 private:
  SensitivityMaps maps_;
  SamplingMask mask_;
};

// Keeps the centered ACS block plus random (or equispaced) non-ACS columns.
// In random style the total kept count is exactly
// max(round(width/acceleration), acs_width), deterministic in the seed.
// Equispaced style keeps the full acceleration grid through the image plus
// the ACS block, which is the layout k-space interpolation kernels need; its
// total can exceed the round(width/acceleration) budget.
SamplingMask make_cartesian_mask(int height, int width, int acceleration,
                                 int acs_width, std::uint64_t seed,
                                 MaskStyle style = MaskStyle::kRandom);

// Adds complex Gaussian noise on kept columns only, rescaled so that
// ||e|| = level * ||y|| exactly. level = 0 returns y unchanged.
MultiCoilKSpace add_measurement_noise(const MultiCoilKSpace& y, double level,
                                      std::uint64_t seed);

}  // namespace adobi
