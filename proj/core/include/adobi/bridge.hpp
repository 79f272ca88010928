#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "adobi/core_types.hpp"

namespace adobi {

// Discretized signal/noise schedule of the bridge between the clean image
// (t = 0) and the degraded source (t = n_steps). alpha runs 0 -> 1 strictly
// increasing; sigma[0] = 0 so the clean endpoint carries no bridge noise.
struct BridgeSchedule {
  std::vector<double> alpha;
  std::vector<double> sigma;

  int n_steps() const { return static_cast<int>(alpha.size()) - 1; }
  void validate() const;

  // alpha[t] = t/n, sigma[t] = sigma_max * sqrt(alpha (1 - alpha)).
  static BridgeSchedule linear(int n_steps, double sigma_max);
};

// Picks nfe+1 points evenly spaced in alpha value, interpolating sigma;
// endpoints stay exact. nfe == n_steps returns the schedule unchanged.
BridgeSchedule reschedule(const BridgeSchedule& schedule, int nfe);

enum class NoiseMode {
  kAsWritten,        // reverse-step noise scale sigma_t*beta - sigma_{t-1}, literally
  kVarianceMatched,  // sqrt(max(0, sigma_{t-1}^2 - beta^2 sigma_t^2))
  kOde,              // deterministic reverse steps, no noise anywhere
};

// Where the measurement-consistency gradient step is applied.
enum class ConsistencySpace {
  kX0,  // on the posterior-mean estimate before resampling (default)
  kXt,  // on the resampled iterate, the k-space-side variant
};

// Schedule point handed to a denoiser along with the iterate.
struct BridgePoint {
  int t_index = 0;
  double alpha = 0.0;
  double sigma = 0.0;
};

// Posterior-mean estimator x_{0|t} = E[x_0 | x_t].
using DenoiserFn = std::function<ComplexImage(const ComplexImage&, const BridgePoint&)>;

struct SamplerConfig {
  int nfe = 10;
  double gamma1 = 2.4;       // consistency step size; 0 disables the update
  double csm_lambda = 1e-2;  // anchor weight, relative to ||y||^2 / ||S_init||^2
  int csm_steps = 5;         // inner gradient iterations per map update
  double csm_lr = 1.0;       // initial inner step size (backtracking halves it)
  NoiseMode noise_mode = NoiseMode::kVarianceMatched;
  ConsistencySpace consistency_space = ConsistencySpace::kX0;
  bool calibrate = true;
  std::uint64_t seed = 0;
};

struct StepRecord {
  int t_index = 0;
  double data_residual = 0.0;  // ||y - A_t x_{0|t}|| after the image update
  double csm_change = 0.0;     // Frobenius distance moved by the map update
};

struct SampleTrace {
  std::vector<StepRecord> steps;  // one record per reverse step
  int gamma_halvings = 0;         // times the residual guard halved gamma1
};

struct SampleResult {
  ComplexImage image;
  SensitivityMaps maps;
  SampleTrace trace;
};

// x_t = (1 - alpha_t) x0 + alpha_t z + sigma_t eps with fresh complex
// Gaussian eps (E|eps|^2 = 1). Deterministic given (seed, t_index).
ComplexImage forward_bridge(const ComplexImage& x0, const ComplexImage& z,
                            int t_index, const BridgeSchedule& schedule,
                            std::uint64_t seed);

// One reverse step t -> t-1:
//   x_{t-1} = (1 - beta) x_{0|t} + beta x_t + coef * eps,  beta = alpha_{t-1}/alpha_t
// with coef chosen by the noise mode.
ComplexImage ddb_step(const ComplexImage& x0_hat, const ComplexImage& x_t,
                      int t_index, const BridgeSchedule& schedule,
                      NoiseMode mode, std::uint64_t seed);

// One gradient step on ||y - A x||^2 at x0_hat with the given maps:
// x0_hat - gamma1 * A^H(A x0_hat - y). The factor 2 of the true gradient is
// absorbed into gamma1.
ComplexImage consistency_update(const ComplexImage& x0_hat, const MultiCoilKSpace& y,
                                const SensitivityMaps& maps, double gamma1);

// J(S) = ||y - P F(S x)||^2 + lambda ||S - S_init||^2 and its per-coil
// gradient conj(x) * F^H P^H (P F(S_i x) - y_i) + lambda (S_i - S_init,i).
double csm_objective(const SensitivityMaps& maps, const ComplexImage& x0_hat,
                     const MultiCoilKSpace& y, const SensitivityMaps& maps_initial,
                     double lambda);
SensitivityMaps csm_gradient(const SensitivityMaps& maps, const ComplexImage& x0_hat,
                             const MultiCoilKSpace& y,
                             const SensitivityMaps& maps_initial, double lambda);

// inner_steps gradient-descent iterations on J with backtracking; the
// objective never increases across returned iterates.
SensitivityMaps csm_update(const SensitivityMaps& maps, const ComplexImage& x0_hat,
                           const MultiCoilKSpace& y,
                           const SensitivityMaps& maps_initial, double lambda,
                           int inner_steps, double lr);

// Full adaptive sampling loop: denoise, consistency update, optional map
// update, resample; returns the final image after one last consistency
// update, the final maps, and a per-step trace. With calibrate = false the
// loop is the measurement-consistent bridge with fixed maps; with gamma1 = 0
// as well it is the plain bridge.
SampleResult sample(const MultiCoilKSpace& y, const ComplexImage& z,
                    const SensitivityMaps& maps_initial, const DenoiserFn& denoiser,
                    const BridgeSchedule& schedule, const SamplerConfig& config);

struct EnsembleResult {
  ComplexImage mean_magnitude;  // pixel-wise mean of |x| over samples
  ComplexImage std_magnitude;   // pixel-wise standard deviation of |x|
  std::vector<SampleResult> samples;
};

// Runs sample() with seeds seed, seed+1, ..., seed+n-1.
EnsembleResult sample_ensemble(const MultiCoilKSpace& y, const ComplexImage& z,
                               const SensitivityMaps& maps_initial,
                               const DenoiserFn& denoiser,
                               const BridgeSchedule& schedule,
                               const SamplerConfig& config, int n_samples);

// Same, with explicit per-sample seeds; duplicates are rejected.
EnsembleResult sample_ensemble_seeds(const MultiCoilKSpace& y, const ComplexImage& z,
                                     const SensitivityMaps& maps_initial,
                                     const DenoiserFn& denoiser,
                                     const BridgeSchedule& schedule,
                                     const SamplerConfig& config,
                                     const std::vector<std::uint64_t>& seeds);

}  // namespace adobi
