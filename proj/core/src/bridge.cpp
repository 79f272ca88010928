#include "adobi/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <set>
#include <stdexcept>

#include "adobi/fft.hpp"
#include "adobi/forward_model.hpp"
#include "adobi/rng.hpp"

namespace adobi {

void BridgeSchedule::validate() const {
  if (alpha.size() != sigma.size())
    throw ScheduleError("schedule: alpha and sigma sizes differ");
  if (alpha.size() < 2) throw ScheduleError("schedule: need at least one step");
  if (alpha.front() != 0.0 || alpha.back() != 1.0)
    throw ScheduleError("schedule: alpha endpoints must be exactly 0 and 1");
  for (std::size_t i = 1; i < alpha.size(); ++i)
    if (!(alpha[i] > alpha[i - 1]))
      throw ScheduleError("schedule: alpha must be strictly increasing");
  if (sigma.front() != 0.0)
    throw ScheduleError("schedule: sigma[0] must be 0 (clean endpoint)");
  for (double s : sigma)
    if (!(s >= 0.0) || !std::isfinite(s))
      throw ScheduleError("schedule: sigma must be finite and >= 0");
}

BridgeSchedule BridgeSchedule::linear(int n_steps, double sigma_max) {
  if (n_steps < 1) throw ScheduleError("schedule: n_steps must be >= 1");
  if (sigma_max < 0.0) throw ScheduleError("schedule: sigma_max must be >= 0");
  BridgeSchedule s;
  s.alpha.resize(static_cast<std::size_t>(n_steps) + 1);
  s.sigma.resize(s.alpha.size());
  for (int t = 0; t <= n_steps; ++t) {
    const double a = static_cast<double>(t) / n_steps;
    s.alpha[static_cast<std::size_t>(t)] = a;
    s.sigma[static_cast<std::size_t>(t)] = sigma_max * std::sqrt(a * (1.0 - a));
  }
  s.validate();
  return s;
}

BridgeSchedule reschedule(const BridgeSchedule& schedule, int nfe) {
  schedule.validate();
  if (nfe < 1 || nfe > schedule.n_steps())
    throw ScheduleError("reschedule: nfe must be in [1, n_steps]");
  if (nfe == schedule.n_steps()) return schedule;

  BridgeSchedule out;
  out.alpha.resize(static_cast<std::size_t>(nfe) + 1);
  out.sigma.resize(out.alpha.size());
  for (int j = 0; j <= nfe; ++j) {
    const double a = static_cast<double>(j) / nfe;
    out.alpha[static_cast<std::size_t>(j)] = a;
    // Piecewise-linear interpolation of sigma as a function of alpha.
    std::size_t hi = 1;
    while (hi + 1 < schedule.alpha.size() && schedule.alpha[hi] < a) ++hi;
    const std::size_t lo = hi - 1;
    const double span = schedule.alpha[hi] - schedule.alpha[lo];
    const double w = span > 0.0 ? (a - schedule.alpha[lo]) / span : 0.0;
    out.sigma[static_cast<std::size_t>(j)] =
        (1.0 - w) * schedule.sigma[lo] + w * schedule.sigma[hi];
  }
  out.sigma.front() = 0.0;
  out.validate();
  return out;
}

ComplexImage forward_bridge(const ComplexImage& x0, const ComplexImage& z,
                            int t_index, const BridgeSchedule& schedule,
                            std::uint64_t seed) {
  if (!x0.same_shape(z)) throw DimensionError("forward_bridge: shape mismatch");
  if (t_index < 0 || t_index > schedule.n_steps())
    throw std::out_of_range("forward_bridge: t_index out of range");
  const double a = schedule.alpha[static_cast<std::size_t>(t_index)];
  const double s = schedule.sigma[static_cast<std::size_t>(t_index)];
  ComplexImage out(x0.height(), x0.width());
  const Complex* p0 = x0.data();
  const Complex* pz = z.data();
  Complex* po = out.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    po[i] = (1.0 - a) * p0[i] + a * pz[i];
  if (s > 0.0) {
    rng::Stream noise(seed, rng::Purpose::kBridgeNoise,
                      static_cast<std::uint32_t>(t_index));
    for (std::size_t i = 0; i < out.size(); ++i) po[i] += s * noise.cgaussian();
  }
  return out;
}

ComplexImage ddb_step(const ComplexImage& x0_hat, const ComplexImage& x_t,
                      int t_index, const BridgeSchedule& schedule,
                      NoiseMode mode, std::uint64_t seed) {
  if (!x0_hat.same_shape(x_t)) throw DimensionError("ddb_step: shape mismatch");
  if (t_index < 1 || t_index > schedule.n_steps())
    throw std::out_of_range("ddb_step: t_index out of range");
  const double a_t = schedule.alpha[static_cast<std::size_t>(t_index)];
  const double a_prev = schedule.alpha[static_cast<std::size_t>(t_index) - 1];
  const double s_t = schedule.sigma[static_cast<std::size_t>(t_index)];
  const double s_prev = schedule.sigma[static_cast<std::size_t>(t_index) - 1];
  if (a_t == 0.0)
    throw ScheduleError("ddb_step: alpha_t is zero at t >= 1");
  const double beta = a_prev / a_t;

  double coef = 0.0;
  switch (mode) {
    case NoiseMode::kAsWritten:
      coef = s_t * beta - s_prev;
      break;
    case NoiseMode::kVarianceMatched:
      coef = std::sqrt(std::max(0.0, s_prev * s_prev - beta * beta * s_t * s_t));
      break;
    case NoiseMode::kOde:
      coef = 0.0;
      break;
  }

  ComplexImage out(x0_hat.height(), x0_hat.width());
  const Complex* ph = x0_hat.data();
  const Complex* pt = x_t.data();
  Complex* po = out.data();
  for (std::size_t i = 0; i < out.size(); ++i)
    po[i] = (1.0 - beta) * ph[i] + beta * pt[i];
  if (coef != 0.0) {
    rng::Stream noise(seed, rng::Purpose::kResampleNoise,
                      static_cast<std::uint32_t>(t_index));
    for (std::size_t i = 0; i < out.size(); ++i) po[i] += coef * noise.cgaussian();
  }
  return out;
}

ComplexImage consistency_update(const ComplexImage& x0_hat, const MultiCoilKSpace& y,
                                const SensitivityMaps& maps, double gamma1) {
  if (gamma1 < 0.0)
    throw ConfigError("consistency_update: gamma1 must be >= 0");
  const ForwardOperator op(maps, y.mask());
  const MultiCoilKSpace ax = op.forward(x0_hat);
  std::vector<ComplexImage> diff;
  diff.reserve(static_cast<std::size_t>(ax.n_coils()));
  for (int i = 0; i < ax.n_coils(); ++i)
    diff.push_back(cimage_axpy(Complex(-1.0, 0.0), y.plane(i), ax.plane(i)));
  const ComplexImage grad = op.adjoint(MultiCoilKSpace(std::move(diff), y.mask()));
  return cimage_axpy(Complex(-gamma1, 0.0), grad, x0_hat);
}

double csm_objective(const SensitivityMaps& maps, const ComplexImage& x0_hat,
                     const MultiCoilKSpace& y, const SensitivityMaps& maps_initial,
                     double lambda) {
  if (lambda < 0.0) throw ConfigError("csm_objective: lambda must be >= 0");
  const ForwardOperator op(maps, y.mask());
  const double residual = op.data_residual(x0_hat, y);
  double anchor = 0.0;
  for (int i = 0; i < maps.n_coils(); ++i) {
    const Complex* pm = maps.map(i).data();
    const Complex* p0 = maps_initial.map(i).data();
    for (std::size_t k = 0; k < maps.map(i).size(); ++k)
      anchor += std::norm(pm[k] - p0[k]);
  }
  return residual * residual + lambda * anchor;
}

SensitivityMaps csm_gradient(const SensitivityMaps& maps, const ComplexImage& x0_hat,
                             const MultiCoilKSpace& y,
                             const SensitivityMaps& maps_initial, double lambda) {
  if (maps.n_coils() != y.n_coils() || maps.n_coils() != maps_initial.n_coils())
    throw DimensionError("csm_gradient: coil count mismatch");
  if (x0_hat.height() != maps.height() || x0_hat.width() != maps.width())
    throw DimensionError("csm_gradient: image shape mismatch");
  const SamplingMask& mask = y.mask();
  std::vector<ComplexImage> grads;
  grads.reserve(static_cast<std::size_t>(maps.n_coils()));
  for (int i = 0; i < maps.n_coils(); ++i) {
    const ComplexImage predicted = mask.apply(fft2c(hadamard(maps.map(i), x0_hat)));
    const ComplexImage diff =
        cimage_axpy(Complex(-1.0, 0.0), y.plane(i), predicted);
    ComplexImage g = conj_hadamard(x0_hat, ifft2c(diff));
    Complex* pg = g.data();
    const Complex* pm = maps.map(i).data();
    const Complex* p0 = maps_initial.map(i).data();
    for (std::size_t k = 0; k < g.size(); ++k) pg[k] += lambda * (pm[k] - p0[k]);
    grads.push_back(std::move(g));
  }
  return SensitivityMaps(std::move(grads));
}

SensitivityMaps csm_update(const SensitivityMaps& maps, const ComplexImage& x0_hat,
                           const MultiCoilKSpace& y,
                           const SensitivityMaps& maps_initial, double lambda,
                           int inner_steps, double lr) {
  if (inner_steps < 0) throw ConfigError("csm_update: inner_steps must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("csm_update: lr must be > 0");

  SensitivityMaps current = maps;
  double objective = csm_objective(current, x0_hat, y, maps_initial, lambda);
  double step = lr;
  for (int it = 0; it < inner_steps; ++it) {
    const SensitivityMaps grad =
        csm_gradient(current, x0_hat, y, maps_initial, lambda);
    bool moved = false;
    for (int halving = 0; halving < 60; ++halving) {
      std::vector<ComplexImage> trial;
      trial.reserve(static_cast<std::size_t>(current.n_coils()));
      for (int i = 0; i < current.n_coils(); ++i)
        trial.push_back(cimage_axpy(Complex(-step, 0.0), grad.map(i), current.map(i)));
      SensitivityMaps candidate(std::move(trial));
      const double trial_objective =
          csm_objective(candidate, x0_hat, y, maps_initial, lambda);
      if (trial_objective <= objective) {
        current = std::move(candidate);
        objective = trial_objective;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;  // gradient is numerically zero at this scale
  }
  return current;
}

namespace {

double maps_distance(const SensitivityMaps& a, const SensitivityMaps& b) {
  double acc = 0.0;
  for (int i = 0; i < a.n_coils(); ++i) {
    const Complex* pa = a.map(i).data();
    const Complex* pb = b.map(i).data();
    for (std::size_t k = 0; k < a.map(i).size(); ++k) acc += std::norm(pa[k] - pb[k]);
  }
  return std::sqrt(acc);
}

// Consistency update guarded against residual growth: halves gamma for this
// step until the quadratic residual does not increase.
ComplexImage guarded_consistency(const ComplexImage& x0_hat, const MultiCoilKSpace& y,
                                 const SensitivityMaps& maps, double gamma,
                                 int* halvings, double* residual_out) {
  const ForwardOperator op(maps, y.mask());
  const double before = op.data_residual(x0_hat, y);
  ComplexImage updated = consistency_update(x0_hat, y, maps, gamma);
  double after = op.data_residual(updated, y);
  int local = 0;
  while (after > before && local < 30) {
    gamma *= 0.5;
    ++local;
    updated = consistency_update(x0_hat, y, maps, gamma);
    after = op.data_residual(updated, y);
  }
  if (local > 0) {
    *halvings += local;
    if (after > before) {
      *residual_out = before;
      return x0_hat;  // give up on the update rather than diverge
    }
  }
  *residual_out = after;
  return updated;
}

}  // namespace

SampleResult sample(const MultiCoilKSpace& y, const ComplexImage& z,
                    const SensitivityMaps& maps_initial, const DenoiserFn& denoiser,
                    const BridgeSchedule& schedule, const SamplerConfig& config) {
  if (!denoiser) throw ConfigError("sample: denoiser is empty");
  if (config.gamma1 < 0.0) throw ConfigError("sample: gamma1 must be >= 0");
  const BridgeSchedule sched = reschedule(schedule, config.nfe);
  const int T = sched.n_steps();
  const bool ode = config.noise_mode == NoiseMode::kOde;

  // Anchor weight: config.csm_lambda is relative to the natural scale
  // ||y||^2 / ||S_init||^2 so the two objective terms are commensurate.
  const double init_norm = norm2(maps_initial);
  const double y_norm = norm2(y);
  const double lambda =
      init_norm > 0.0
          ? config.csm_lambda * (y_norm * y_norm) / (init_norm * init_norm)
          : 0.0;

  // Start of the reverse pass: the bridge at t = T is z plus schedule noise.
  ComplexImage x_t = z;
  const double sigma_top = sched.sigma[static_cast<std::size_t>(T)];
  if (!ode && sigma_top > 0.0) {
    rng::Stream noise(config.seed, rng::Purpose::kBridgeNoise,
                      static_cast<std::uint32_t>(T));
    Complex* p = x_t.data();
    for (std::size_t i = 0; i < x_t.size(); ++i) p[i] += sigma_top * noise.cgaussian();
  }

  SensitivityMaps maps = maps_initial;
  SampleTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(T));

  for (int t = T; t >= 1; --t) {
    const BridgePoint point{t, sched.alpha[static_cast<std::size_t>(t)],
                            ode ? 0.0 : sched.sigma[static_cast<std::size_t>(t)]};
    ComplexImage x0_hat = denoiser(x_t, point);
    if (!x0_hat.same_shape(x_t))
      throw DimensionError("sample: denoiser changed the image shape");

    double residual = 0.0;
    if (config.gamma1 > 0.0 && config.consistency_space == ConsistencySpace::kX0) {
      x0_hat = guarded_consistency(x0_hat, y, maps, config.gamma1,
                                   &trace.gamma_halvings, &residual);
    } else {
      residual = ForwardOperator(maps, y.mask()).data_residual(x0_hat, y);
    }

    double csm_change = 0.0;
    if (config.calibrate) {
      SensitivityMaps updated = csm_update(maps, x0_hat, y, maps_initial, lambda,
                                           config.csm_steps, config.csm_lr);
      csm_change = maps_distance(updated, maps);
      maps = std::move(updated);
    }
    trace.steps.push_back({t, residual, csm_change});

    x_t = ddb_step(x0_hat, x_t, t, sched, config.noise_mode, config.seed);
    if (config.gamma1 > 0.0 && config.consistency_space == ConsistencySpace::kXt) {
      // Correction applied to the resampled iterate instead.
      const ForwardOperator op(maps, y.mask());
      const MultiCoilKSpace ax = op.forward(x0_hat);
      std::vector<ComplexImage> diff;
      diff.reserve(static_cast<std::size_t>(ax.n_coils()));
      for (int i = 0; i < ax.n_coils(); ++i)
        diff.push_back(cimage_axpy(Complex(-1.0, 0.0), ax.plane(i), y.plane(i)));
      const ComplexImage corr = op.adjoint(MultiCoilKSpace(std::move(diff), y.mask()));
      x_t = cimage_axpy(Complex(config.gamma1, 0.0), corr, x_t);
    }
  }

  ComplexImage final_image = x_t;
  if (config.gamma1 > 0.0 && config.consistency_space == ConsistencySpace::kX0) {
    double residual = 0.0;
    final_image = guarded_consistency(final_image, y, maps, config.gamma1,
                                      &trace.gamma_halvings, &residual);
  }
  if (trace.gamma_halvings > 0)
    std::cerr << "adobi: consistency guard halved gamma1 " << trace.gamma_halvings
              << " time(s) to keep the data residual non-increasing\n";
  return {std::move(final_image), std::move(maps), std::move(trace)};
}

EnsembleResult sample_ensemble_seeds(const MultiCoilKSpace& y, const ComplexImage& z,
                                     const SensitivityMaps& maps_initial,
                                     const DenoiserFn& denoiser,
                                     const BridgeSchedule& schedule,
                                     const SamplerConfig& config,
                                     const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("sample_ensemble: need at least one sample");
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size())
    throw ConfigError("sample_ensemble: sample seeds must be distinct");

  EnsembleResult out;
  out.samples.reserve(seeds.size());
  for (std::uint64_t s : seeds) {
    SamplerConfig per = config;
    per.seed = s;
    out.samples.push_back(sample(y, z, maps_initial, denoiser, schedule, per));
  }

  const ComplexImage& first = out.samples.front().image;
  const std::size_t n_pixels = first.size();
  const double n = static_cast<double>(seeds.size());
  std::vector<double> mean(n_pixels, 0.0), m2(n_pixels, 0.0);
  for (const auto& sres : out.samples) {
    const Complex* p = sres.image.data();
    for (std::size_t i = 0; i < n_pixels; ++i) mean[i] += std::abs(p[i]);
  }
  for (double& v : mean) v /= n;
  for (const auto& sres : out.samples) {
    const Complex* p = sres.image.data();
    for (std::size_t i = 0; i < n_pixels; ++i) {
      const double d = std::abs(p[i]) - mean[i];
      m2[i] += d * d;
    }
  }
  out.mean_magnitude = ComplexImage(first.height(), first.width());
  out.std_magnitude = ComplexImage(first.height(), first.width());
  for (std::size_t i = 0; i < n_pixels; ++i) {
    out.mean_magnitude.data()[i] = Complex(mean[i], 0.0);
    out.std_magnitude.data()[i] = Complex(std::sqrt(m2[i] / n), 0.0);
  }
  return out;
}

EnsembleResult sample_ensemble(const MultiCoilKSpace& y, const ComplexImage& z,
                               const SensitivityMaps& maps_initial,
                               const DenoiserFn& denoiser,
                               const BridgeSchedule& schedule,
                               const SamplerConfig& config, int n_samples) {
  if (n_samples < 1) throw ConfigError("sample_ensemble: n_samples must be >= 1");
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(n_samples));
  for (int k = 0; k < n_samples; ++k)
    seeds.push_back(config.seed + static_cast<std::uint64_t>(k));
  return sample_ensemble_seeds(y, z, maps_initial, denoiser, schedule, config, seeds);
}

}  // namespace adobi
