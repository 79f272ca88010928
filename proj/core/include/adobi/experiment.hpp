#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "adobi/bridge.hpp"
#include "adobi/core_types.hpp"
#include "adobi/denoiser.hpp"
#include "adobi/forward_model.hpp"
#include "adobi/phantom.hpp"

namespace adobi {

// One experiment, fully described. Every field has a default; the CLI
// serializes the resolved set into each output directory. The master seed
// drives the phantom, the map perturbation, the mask, the measurement noise,
// and the sampler; the coil rig geometry and the denoiser training set have
// their own seeds so they stay fixed across evaluation seeds.
struct ExperimentConfig {
  // phantom and coils
  int size = 64;
  int n_ellipses = 6;
  int n_coils = 8;
  double coil_perturbation = 0.1;
  std::uint64_t coil_seed = 7;
  int coil_bandlimit = 0;
  bool coil_normalize = true;

  // mask and noise
  int acceleration = 4;
  int acs_width = 24;
  std::string mask_style = "random";  // random | equispaced
  double noise_level = 0.1;

  // schedule and sampler
  int train_steps = 1000;
  double sigma_max = 0.1;  // relative to max |z|
  int nfe = 10;
  double gamma1 = 2.4;
  double csm_lambda = 1e-2;
  int csm_steps = 5;
  double csm_lr = 1.0;
  std::string noise_mode = "variance-matched";  // as-written | variance-matched | ode

  // pipeline
  std::string method = "adobi";   // zf | grappa | ddb | cddb | adobi
  std::string init = "zf";        // zf | grappa
  std::string init_maps = "perturb";  // perturb | acs
  std::string denoiser = "gaussian-oracle";  // gaussian-oracle | ridge:PATH | gaussian:PATH
  int train_pairs = 160;
  std::uint64_t train_seed = 9001;
  int n_samples = 1;
  std::uint64_t seed = 1;

  // grappa
  int grappa_kernel_rows = 5;
  int grappa_kernel_cols = 4;
  double grappa_tikhonov = 1e-4;
  int smoothing_width = 0;

  std::string out_dir = "out";
};

NoiseMode parse_noise_mode(const std::string& name);
MaskStyle parse_mask_style(const std::string& name);

// Per-purpose sub-seeds derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint32_t slot);

struct SimulatedData {
  ComplexImage phantom;
  CoilSet coils;
  SamplingMask mask;
  MultiCoilKSpace kspace;
};

SimulatedData simulate(const ExperimentConfig& config);

// Maps handed to the reconstruction: the perturbed rig or an ACS estimate.
SensitivityMaps initial_maps_for(const ExperimentConfig& config,
                                 const SimulatedData& data);

// z for the bridge: zero-filled or the GRAPPA warm start, both built with
// the maps the reconstruction is allowed to see.
ComplexImage build_init(const ExperimentConfig& config, const MultiCoilKSpace& y,
                        const SensitivityMaps& maps);

// The schedule used everywhere: linear alpha over train_steps, sigma_max
// scaled by max |z| of the source image the bridge starts from.
BridgeSchedule build_schedule(const ExperimentConfig& config, const ComplexImage& z);

// gaussian-oracle fits a Gaussian pair model on train_pairs fresh synthetic
// pairs matching the config (marginalizing mask, noise, and perturbation);
// ridge:PATH and gaussian:PATH load a trained denoiser from disk.
DenoiserFn build_denoiser(const ExperimentConfig& config);

// Synthetic training pairs (clean image, bridge source) for the config.
std::vector<std::pair<ComplexImage, ComplexImage>> training_pairs(
    const ExperimentConfig& config, int count, std::uint64_t seed);

struct ReconOutput {
  ComplexImage image;
  SensitivityMaps maps;
  SampleTrace trace;
  EnsembleResult ensemble;  // populated when n_samples > 1
  bool has_ensemble = false;
  double runtime_s = 0.0;
  double data_residual = 0.0;  // against the true maps' operator
};

// Reconstruction per config.method from a measurement and the maps the
// method is allowed to see. data_residual is left at zero (no ground truth).
ReconOutput reconstruct_measurement(const ExperimentConfig& config,
                                    const MultiCoilKSpace& y,
                                    const SensitivityMaps& initial_maps);

// Full reconstruction for simulated data; also fills the residual against
// the true operator.
ReconOutput reconstruct(const ExperimentConfig& config, const SimulatedData& data);

}  // namespace adobi
