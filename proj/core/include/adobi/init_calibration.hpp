#pragma once

#include <vector>

#include "adobi/core_types.hpp"

namespace adobi {

// Per-offset interpolation weights fit on the ACS block. For a missing
// column at distance d from its left grid neighbour, sources are the
// kernel_cols nearest grid columns and kernel_rows rows around the target;
// tap order is ((source_coil * kernel_rows + row_tap) * kernel_cols + col_tap).
// Out-of-bounds taps read as zero during both calibration and application.
struct GrappaKernel {
  int acceleration = 1;
  int kernel_rows = 5;
  int kernel_cols = 4;
  int n_coils = 0;
  int grid_residue = 0;  // column residue of the acquired grid, mod acceleration
  // weights[d-1][target_coil * taps + tap] for offset d in [1, acceleration)
  std::vector<std::vector<Complex>> weights;
  std::vector<double> fit_residual;  // relative LS residual per offset

  int taps() const { return n_coils * kernel_rows * kernel_cols; }
  bool empty() const { return acceleration <= 1; }
};

// A^H y with the given maps; the standard zero-filled reconstruction.
ComplexImage zero_filled_init(const MultiCoilKSpace& y, const SensitivityMaps& maps);

// Fits one weight set per missing-line offset by Tikhonov-regularized least
// squares over every ACS position whose sources lie on the acquired grid.
// The mask must be equispaced outside the ACS block. tikhonov is relative to
// the mean diagonal of the normal matrix; 0 requests a plain LS solve.
GrappaKernel grappa_calibrate(const MultiCoilKSpace& y, int kernel_rows = 5,
                              int kernel_cols = 4, double tikhonov = 1e-4);

// Fills every missing column per coil; acquired columns pass through
// bit-identical. The returned stack carries a full mask.
MultiCoilKSpace grappa_fill(const GrappaKernel& kernel, const MultiCoilKSpace& y);

// grappa_fill followed by coil combination: A^H with the given maps over the
// filled (fully sampled) stack, or root-sum-of-squares when maps is null.
ComplexImage grappa_apply(const GrappaKernel& kernel, const MultiCoilKSpace& y,
                          const SensitivityMaps* maps = nullptr);

// Low-resolution coil maps from the ACS block: per coil, inverse transform
// of the Hann-apodized ACS columns, divided by the root-sum-of-squares
// across coils (1e-8 floor), then normalized on support. smoothing_width
// limits the window to that many central columns; 0 uses the whole ACS.
SensitivityMaps estimate_csm_from_acs(const MultiCoilKSpace& y,
                                      int smoothing_width = 0);

}  // namespace adobi
