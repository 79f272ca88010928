#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "adobi/bridge.hpp"
#include "adobi/core_types.hpp"

namespace adobi {

// Jointly Gaussian (clean, source) pair, independent across frequency bins.
// Under the bridge mixture the conditional mean of the clean image given the
// iterate is affine per frequency, so this model gives an exact closed-form
// posterior-mean denoiser to test the sampler against.
struct GaussianPairModel {
  int height = 0;
  int width = 0;
  std::vector<Complex> mean0;   // per-frequency mean of the clean image
  std::vector<Complex> meanz;   // per-frequency mean of the source image
  std::vector<double> var0;
  std::vector<double> varz;
  std::vector<Complex> cov0z;   // E[(X0 - m0) conj(Z - mz)]

  void validate() const;  // sizes, finiteness, PSD of each 2x2 block

  // Per-frequency sample statistics over (clean, source) image pairs.
  static GaussianPairModel fit(
      const std::vector<std::pair<ComplexImage, ComplexImage>>& pairs);
};

// Exact conditional mean E[x0 | x_t] under the model at mixture (alpha,
// sigma). Throws NumericalError when the predictive variance of a bin is
// zero but the observation deviates from its mean.
ComplexImage gaussian_mmse(const GaussianPairModel& model, const ComplexImage& x_t,
                           double alpha, double sigma);
ComplexImage gaussian_mmse(const GaussianPairModel& model, const ComplexImage& x_t,
                           int t_index, const BridgeSchedule& schedule);

// Mean per-pixel squared error of the conditional mean at (alpha, sigma);
// the floor no estimator beats on this model.
double gaussian_mmse_expected_error(const GaussianPairModel& model, double alpha,
                                    double sigma);

// Draws one (clean, source) image pair from the model.
std::pair<ComplexImage, ComplexImage> draw_gaussian_pair(
    const GaussianPairModel& model, std::uint64_t seed, std::uint32_t index = 0);

// Affine patch denoiser fit per time bin by closed-form ridge regression on
// bridge draws. One weight vector ((2r+1)^2 taps) plus a scalar bias per bin;
// bins partition alpha in [0, 1] uniformly.
struct RidgeDenoiser {
  int time_bins = 16;
  int patch_radius = 2;
  double ridge_weight = 1e-3;  // relative to the mean feature energy
  std::vector<std::vector<Complex>> weights;   // per bin
  std::vector<Complex> bias;                   // per bin
  std::vector<double> train_mse;               // per bin
  std::vector<double> solve_residual;          // relative normal-equation residual
  std::vector<std::uint8_t> trained;           // per bin

  int taps() const { return (2 * patch_radius + 1) * (2 * patch_radius + 1); }
  int bin_of(double alpha) const;
  ComplexImage apply(const ComplexImage& x_t, double alpha) const;
};

// Fits the per-bin maps over all pixels of draws_per_bin bridge draws per
// training pair, time indices sampled uniformly within each bin.
RidgeDenoiser ridge_train(
    const std::vector<std::pair<ComplexImage, ComplexImage>>& pairs,
    const BridgeSchedule& schedule, int time_bins = 16, int patch_radius = 2,
    double ridge_weight = 1e-3, std::uint64_t seed = 0, int draws_per_bin = 2);

ComplexImage ridge_apply(const RidgeDenoiser& denoiser, const ComplexImage& x_t,
                         int t_index, const BridgeSchedule& schedule);

DenoiserFn make_denoiser(GaussianPairModel model);
DenoiserFn make_denoiser(RidgeDenoiser denoiser);

}  // namespace adobi
