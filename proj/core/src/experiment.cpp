#include "adobi/experiment.hpp"

#include <chrono>
#include <cmath>

#include "adobi/init_calibration.hpp"
#include "adobi/mrid_io.hpp"
#include "adobi/rng.hpp"

namespace adobi {
namespace {

// Sub-seed slots under the master seed.
constexpr std::uint32_t kSlotPhantom = 1;
constexpr std::uint32_t kSlotPerturbation = 2;
constexpr std::uint32_t kSlotMask = 3;
constexpr std::uint32_t kSlotNoise = 4;
constexpr std::uint32_t kSlotSampler = 5;

GrappaKernel calibrate_for(const ExperimentConfig& config, const MultiCoilKSpace& y) {
  return grappa_calibrate(y, config.grappa_kernel_rows, config.grappa_kernel_cols,
                          config.grappa_tikhonov);
}

}  // namespace

NoiseMode parse_noise_mode(const std::string& name) {
  if (name == "as-written") return NoiseMode::kAsWritten;
  if (name == "variance-matched") return NoiseMode::kVarianceMatched;
  if (name == "ode") return NoiseMode::kOde;
  throw ConfigError("unknown noise mode: " + name);
}

MaskStyle parse_mask_style(const std::string& name) {
  if (name == "random") return MaskStyle::kRandom;
  if (name == "equispaced") return MaskStyle::kEquispaced;
  throw ConfigError("unknown mask style: " + name);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint32_t slot) {
  rng::Stream stream(master, rng::Purpose::kGeneric, slot);
  return stream.u64();
}

SimulatedData simulate(const ExperimentConfig& config) {
  PhantomSpec phantom_spec;
  phantom_spec.size = config.size;
  phantom_spec.n_ellipses = config.n_ellipses;
  phantom_spec.seed = derive_seed(config.seed, kSlotPhantom);
  ComplexImage phantom = make_phantom(phantom_spec);

  CoilModelSpec coil_spec;
  coil_spec.n_coils = config.n_coils;
  coil_spec.perturbation = config.coil_perturbation;
  coil_spec.bandlimit = config.coil_bandlimit;
  coil_spec.normalize = config.coil_normalize;
  coil_spec.seed = config.coil_seed;
  coil_spec.perturbation_seed = derive_seed(config.seed, kSlotPerturbation);
  CoilSet coils = make_coils(coil_spec, config.size, config.size);

  SamplingMask mask = make_cartesian_mask(
      config.size, config.size, config.acceleration, config.acs_width,
      derive_seed(config.seed, kSlotMask), parse_mask_style(config.mask_style));

  ForwardOperator op(coils.true_maps, mask);
  MultiCoilKSpace kspace = add_measurement_noise(
      op.forward(phantom), config.noise_level, derive_seed(config.seed, kSlotNoise));

  return {std::move(phantom), std::move(coils), std::move(mask), std::move(kspace)};
}

SensitivityMaps initial_maps_for(const ExperimentConfig& config,
                                 const SimulatedData& data) {
  if (config.init_maps == "perturb") return data.coils.initial_maps;
  if (config.init_maps == "acs")
    return estimate_csm_from_acs(data.kspace, config.smoothing_width);
  if (config.init_maps == "true") return data.coils.true_maps;
  throw ConfigError("unknown init_maps mode: " + config.init_maps);
}

ComplexImage build_init(const ExperimentConfig& config, const MultiCoilKSpace& y,
                        const SensitivityMaps& maps) {
  if (config.init == "zf") return zero_filled_init(y, maps);
  if (config.init == "grappa") {
    const GrappaKernel kernel = calibrate_for(config, y);
    return grappa_apply(kernel, y, &maps);
  }
  throw ConfigError("unknown init: " + config.init);
}

BridgeSchedule build_schedule(const ExperimentConfig& config, const ComplexImage& z) {
  const double scale = max_abs(z);
  return BridgeSchedule::linear(config.train_steps,
                                config.sigma_max * (scale > 0.0 ? scale : 1.0));
}

std::vector<std::pair<ComplexImage, ComplexImage>> training_pairs(
    const ExperimentConfig& config, int count, std::uint64_t seed) {
  std::vector<std::pair<ComplexImage, ComplexImage>> pairs;
  pairs.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    ExperimentConfig per = config;
    per.seed = derive_seed(seed, static_cast<std::uint32_t>(k));
    const SimulatedData data = simulate(per);
    const SensitivityMaps maps = initial_maps_for(per, data);
    pairs.emplace_back(data.phantom, build_init(per, data.kspace, maps));
  }
  return pairs;
}

DenoiserFn build_denoiser(const ExperimentConfig& config) {
  const std::string& spec = config.denoiser;
  if (spec == "gaussian-oracle") {
    const auto pairs = training_pairs(config, config.train_pairs, config.train_seed);
    return make_denoiser(GaussianPairModel::fit(pairs));
  }
  if (spec.rfind("ridge:", 0) == 0) {
    LoadedDenoiser loaded = load_denoiser(spec.substr(6));
    if (!loaded.ridge) throw ConfigError("denoiser file is not a ridge denoiser");
    return make_denoiser(std::move(*loaded.ridge));
  }
  if (spec.rfind("gaussian:", 0) == 0) {
    LoadedDenoiser loaded = load_denoiser(spec.substr(9));
    if (!loaded.gaussian)
      throw ConfigError("denoiser file is not a Gaussian pair model");
    return make_denoiser(std::move(*loaded.gaussian));
  }
  throw ConfigError("unknown denoiser spec: " + spec);
}

ReconOutput reconstruct_measurement(const ExperimentConfig& config,
                                    const MultiCoilKSpace& y,
                                    const SensitivityMaps& initial_maps) {
  const auto start = std::chrono::steady_clock::now();
  ReconOutput out{ComplexImage(y.height(), y.width()), initial_maps, {}, {}, false,
                  0.0, 0.0};

  if (config.method == "zf") {
    out.image = zero_filled_init(y, initial_maps);
  } else if (config.method == "grappa") {
    const GrappaKernel kernel = calibrate_for(config, y);
    out.image = grappa_apply(kernel, y, &initial_maps);
  } else if (config.method == "ddb" || config.method == "cddb" ||
             config.method == "adobi") {
    SamplerConfig sampler;
    sampler.nfe = config.nfe;
    sampler.gamma1 = config.method == "ddb" ? 0.0 : config.gamma1;
    sampler.calibrate = config.method == "adobi";
    sampler.csm_lambda = config.csm_lambda;
    sampler.csm_steps = config.csm_steps;
    sampler.csm_lr = config.csm_lr;
    sampler.noise_mode = parse_noise_mode(config.noise_mode);
    sampler.seed = derive_seed(config.seed, kSlotSampler);

    const ComplexImage z = build_init(config, y, initial_maps);
    const BridgeSchedule schedule = build_schedule(config, z);
    const DenoiserFn denoiser = build_denoiser(config);

    if (config.n_samples > 1) {
      out.ensemble = sample_ensemble(y, z, initial_maps, denoiser, schedule,
                                     sampler, config.n_samples);
      out.has_ensemble = true;
      out.image = out.ensemble.samples.front().image;
      out.maps = out.ensemble.samples.front().maps;
      out.trace = out.ensemble.samples.front().trace;
    } else {
      SampleResult result = sample(y, z, initial_maps, denoiser, schedule, sampler);
      out.image = std::move(result.image);
      out.maps = std::move(result.maps);
      out.trace = std::move(result.trace);
    }
  } else {
    throw ConfigError("unknown method: " + config.method);
  }

  out.runtime_s = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - start)
                      .count();
  return out;
}

ReconOutput reconstruct(const ExperimentConfig& config, const SimulatedData& data) {
  const SensitivityMaps init_maps = initial_maps_for(config, data);
  ReconOutput out = reconstruct_measurement(config, data.kspace, init_maps);
  out.data_residual =
      ForwardOperator(data.coils.true_maps, data.mask).data_residual(out.image,
                                                                     data.kspace);
  return out;
}

}  // namespace adobi
