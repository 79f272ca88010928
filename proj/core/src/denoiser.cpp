#include "adobi/denoiser.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "adobi/fft.hpp"
#include "adobi/rng.hpp"

namespace adobi {
namespace {

constexpr double kTinyVar = 1e-300;

struct Conditional {
  Complex mean_t;  // E[X_t]
  double var_t;    // Var(X_t)
  Complex cov0t;   // Cov(X0, X_t)
};

inline Conditional conditional_at(const GaussianPairModel& m, std::size_t f,
                                  double a, double sigma) {
  Conditional c;
  c.mean_t = (1.0 - a) * m.mean0[f] + a * m.meanz[f];
  c.var_t = (1.0 - a) * (1.0 - a) * m.var0[f] + a * a * m.varz[f] +
            2.0 * a * (1.0 - a) * m.cov0z[f].real() + sigma * sigma;
  c.cov0t = (1.0 - a) * m.var0[f] + a * m.cov0z[f];
  return c;
}

}  // namespace

void GaussianPairModel::validate() const {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  if (height <= 0 || width <= 0)
    throw DimensionError("GaussianPairModel: dimensions must be positive");
  if (mean0.size() != n || meanz.size() != n || var0.size() != n ||
      varz.size() != n || cov0z.size() != n)
    throw DimensionError("GaussianPairModel: field sizes do not match shape");
  for (std::size_t f = 0; f < n; ++f) {
    if (!(var0[f] >= 0.0) || !(varz[f] >= 0.0))
      throw NumericalError("GaussianPairModel: negative variance");
    const double bound = var0[f] * varz[f];
    if (std::norm(cov0z[f]) > bound * (1.0 + 1e-9) + 1e-30)
      throw NumericalError("GaussianPairModel: covariance block not PSD");
  }
}

GaussianPairModel GaussianPairModel::fit(
    const std::vector<std::pair<ComplexImage, ComplexImage>>& pairs) {
  if (pairs.empty()) throw ConfigError("GaussianPairModel::fit: no pairs");
  const ComplexImage& ref = pairs.front().first;
  GaussianPairModel m;
  m.height = ref.height();
  m.width = ref.width();
  const std::size_t n = ref.size();
  m.mean0.assign(n, Complex(0, 0));
  m.meanz.assign(n, Complex(0, 0));
  m.var0.assign(n, 0.0);
  m.varz.assign(n, 0.0);
  m.cov0z.assign(n, Complex(0, 0));

  std::vector<std::pair<ComplexImage, ComplexImage>> spectra;
  spectra.reserve(pairs.size());
  for (const auto& [x0, z] : pairs) {
    if (!x0.same_shape(ref) || !z.same_shape(ref))
      throw DimensionError("GaussianPairModel::fit: inconsistent shapes");
    spectra.emplace_back(fft2(x0), fft2(z));
  }
  const double count = static_cast<double>(spectra.size());
  for (const auto& [s0, sz] : spectra)
    for (std::size_t f = 0; f < n; ++f) {
      m.mean0[f] += s0.data()[f];
      m.meanz[f] += sz.data()[f];
    }
  for (std::size_t f = 0; f < n; ++f) {
    m.mean0[f] /= count;
    m.meanz[f] /= count;
  }
  for (const auto& [s0, sz] : spectra)
    for (std::size_t f = 0; f < n; ++f) {
      const Complex d0 = s0.data()[f] - m.mean0[f];
      const Complex dz = sz.data()[f] - m.meanz[f];
      m.var0[f] += std::norm(d0);
      m.varz[f] += std::norm(dz);
      m.cov0z[f] += d0 * std::conj(dz);
    }
  for (std::size_t f = 0; f < n; ++f) {
    m.var0[f] /= count;
    m.varz[f] /= count;
    m.cov0z[f] /= count;
  }
  m.validate();
  return m;
}

ComplexImage gaussian_mmse(const GaussianPairModel& model, const ComplexImage& x_t,
                           double alpha, double sigma) {
  if (x_t.height() != model.height || x_t.width() != model.width)
    throw DimensionError("gaussian_mmse: image shape does not match model");
  const ComplexImage spectrum = fft2(x_t);
  ComplexImage estimate(model.height, model.width);
  const double scale = norm2(spectrum) + 1.0;
  for (std::size_t f = 0; f < spectrum.size(); ++f) {
    const Conditional c = conditional_at(model, f, alpha, sigma);
    const Complex deviation = spectrum.data()[f] - c.mean_t;
    if (c.var_t <= kTinyVar) {
      if (std::abs(deviation) > 1e-9 * scale)
        throw NumericalError(
            "gaussian_mmse: zero predictive variance with nonzero deviation");
      estimate.data()[f] = model.mean0[f];
    } else {
      estimate.data()[f] = model.mean0[f] + (c.cov0t / c.var_t) * deviation;
    }
  }
  return ifft2(estimate);
}

ComplexImage gaussian_mmse(const GaussianPairModel& model, const ComplexImage& x_t,
                           int t_index, const BridgeSchedule& schedule) {
  if (t_index < 0 || t_index > schedule.n_steps())
    throw std::out_of_range("gaussian_mmse: t_index out of range");
  return gaussian_mmse(model, x_t,
                       schedule.alpha[static_cast<std::size_t>(t_index)],
                       schedule.sigma[static_cast<std::size_t>(t_index)]);
}

double gaussian_mmse_expected_error(const GaussianPairModel& model, double alpha,
                                    double sigma) {
  double total = 0.0;
  const std::size_t n = model.mean0.size();
  for (std::size_t f = 0; f < n; ++f) {
    const Conditional c = conditional_at(model, f, alpha, sigma);
    double mse = model.var0[f];
    if (c.var_t > kTinyVar) mse -= std::norm(c.cov0t) / c.var_t;
    total += std::max(mse, 0.0);
  }
  return total / static_cast<double>(n);
}

std::pair<ComplexImage, ComplexImage> draw_gaussian_pair(
    const GaussianPairModel& model, std::uint64_t seed, std::uint32_t index) {
  rng::Stream stream(seed, rng::Purpose::kPairDraw, index);
  ComplexImage s0(model.height, model.width);
  ComplexImage sz(model.height, model.width);
  for (std::size_t f = 0; f < s0.size(); ++f) {
    const Complex u = stream.cgaussian();
    const Complex v = stream.cgaussian();
    const double a = std::sqrt(model.var0[f]);
    s0.data()[f] = model.mean0[f] + a * u;
    Complex zval = model.meanz[f];
    if (a > 0.0) {
      const Complex b = std::conj(model.cov0z[f]) / a;
      const double residual =
          std::max(0.0, model.varz[f] - std::norm(model.cov0z[f]) / model.var0[f]);
      zval += b * u + std::sqrt(residual) * v;
    } else {
      zval += std::sqrt(model.varz[f]) * v;
    }
    sz.data()[f] = zval;
  }
  return {ifft2(s0), ifft2(sz)};
}

int RidgeDenoiser::bin_of(double alpha) const {
  const int bin = static_cast<int>(alpha * time_bins);
  return std::clamp(bin, 0, time_bins - 1);
}

ComplexImage RidgeDenoiser::apply(const ComplexImage& x_t, double alpha) const {
  const int bin = bin_of(alpha);
  if (trained.empty() || !trained[static_cast<std::size_t>(bin)])
    throw ConfigError("RidgeDenoiser: bin " + std::to_string(bin) +
                      " has no trained weights");
  const std::vector<Complex>& w = weights[static_cast<std::size_t>(bin)];
  const Complex b = bias[static_cast<std::size_t>(bin)];
  const int r0 = patch_radius;
  ComplexImage out(x_t.height(), x_t.width());
  for (int r = 0; r < x_t.height(); ++r)
    for (int c = 0; c < x_t.width(); ++c) {
      Complex acc = b;
      int tap = 0;
      for (int dr = -r0; dr <= r0; ++dr)
        for (int dc = -r0; dc <= r0; ++dc, ++tap) {
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= x_t.height() || cc < 0 || cc >= x_t.width()) continue;
          acc += w[static_cast<std::size_t>(tap)] * x_t.at(rr, cc);
        }
      out.at(r, c) = acc;
    }
  return out;
}

RidgeDenoiser ridge_train(
    const std::vector<std::pair<ComplexImage, ComplexImage>>& pairs,
    const BridgeSchedule& schedule, int time_bins, int patch_radius,
    double ridge_weight, std::uint64_t seed, int draws_per_bin) {
  if (pairs.empty()) throw ConfigError("ridge_train: need at least one pair");
  if (time_bins < 1) throw ConfigError("ridge_train: time_bins must be >= 1");
  if (patch_radius < 0) throw ConfigError("ridge_train: patch_radius must be >= 0");
  if (draws_per_bin < 1) throw ConfigError("ridge_train: draws_per_bin must be >= 1");
  if (!(ridge_weight > 0.0))
    throw NumericalError("ridge_train: ridge_weight must be > 0 "
                         "(the normal equations may be singular without it)");
  schedule.validate();

  RidgeDenoiser d;
  d.time_bins = time_bins;
  d.patch_radius = patch_radius;
  d.ridge_weight = ridge_weight;
  const int taps = d.taps();
  d.weights.assign(static_cast<std::size_t>(time_bins),
                   std::vector<Complex>(static_cast<std::size_t>(taps)));
  d.bias.assign(static_cast<std::size_t>(time_bins), Complex(0, 0));
  d.train_mse.assign(static_cast<std::size_t>(time_bins), 0.0);
  d.solve_residual.assign(static_cast<std::size_t>(time_bins), 0.0);
  d.trained.assign(static_cast<std::size_t>(time_bins), 0);

  // Schedule indices available to each bin.
  std::vector<std::vector<int>> bin_indices(static_cast<std::size_t>(time_bins));
  for (int t = 0; t <= schedule.n_steps(); ++t)
    bin_indices[static_cast<std::size_t>(
                    d.bin_of(schedule.alpha[static_cast<std::size_t>(t)]))]
        .push_back(t);

  const int dim = taps + 1;  // patch taps plus the bias feature
  for (int bin = 0; bin < time_bins; ++bin) {
    const auto& indices = bin_indices[static_cast<std::size_t>(bin)];
    if (indices.empty()) continue;

    rng::Stream picker(seed, rng::Purpose::kDenoiserTraining,
                       static_cast<std::uint32_t>(bin));
    Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(dim, dim);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(dim);
    double target_energy = 0.0;
    long count = 0;

    Eigen::VectorXcd feature(dim);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      for (int k = 0; k < draws_per_bin; ++k) {
        const int t = indices[picker.below(static_cast<std::uint32_t>(indices.size()))];
        const std::uint64_t draw_seed = picker.u64();
        const ComplexImage x_t =
            forward_bridge(pairs[p].first, pairs[p].second, t, schedule, draw_seed);
        const ComplexImage& x0 = pairs[p].first;
        for (int r = 0; r < x_t.height(); ++r)
          for (int c = 0; c < x_t.width(); ++c) {
            int tap = 0;
            for (int dr = -patch_radius; dr <= patch_radius; ++dr)
              for (int dc = -patch_radius; dc <= patch_radius; ++dc, ++tap) {
                const int rr = r + dr;
                const int cc = c + dc;
                feature(tap) = (rr < 0 || rr >= x_t.height() || cc < 0 ||
                                cc >= x_t.width())
                                   ? Complex(0, 0)
                                   : x_t.at(rr, cc);
              }
            feature(taps) = Complex(1, 0);
            const Complex target = x0.at(r, c);
            gram.noalias() += feature.conjugate() * feature.transpose();
            rhs.noalias() += feature.conjugate() * target;
            target_energy += std::norm(target);
            ++count;
          }
      }
    }

    // Ridge scaled by the mean feature energy; the bias row is unpenalized.
    Eigen::MatrixXcd regularized = gram;
    const double mean_diag = gram.diagonal().real().head(taps).mean();
    for (int t = 0; t < taps; ++t)
      regularized(t, t) += ridge_weight * std::max(mean_diag, kTinyVar);
    const Eigen::VectorXcd w = regularized.ldlt().solve(rhs);

    const double rhs_norm = rhs.norm();
    d.solve_residual[static_cast<std::size_t>(bin)] =
        rhs_norm > 0.0 ? (regularized * w - rhs).norm() / rhs_norm : 0.0;

    // Training MSE from the accumulated quadratic form.
    const double fit = target_energy - 2.0 * (w.adjoint() * rhs).real()(0) +
                       (w.adjoint() * gram * w).real()(0);
    d.train_mse[static_cast<std::size_t>(bin)] =
        std::max(fit, 0.0) / static_cast<double>(count);

    for (int t = 0; t < taps; ++t)
      d.weights[static_cast<std::size_t>(bin)][static_cast<std::size_t>(t)] = w(t);
    d.bias[static_cast<std::size_t>(bin)] = w(taps);
    d.trained[static_cast<std::size_t>(bin)] = 1;
  }
  return d;
}

ComplexImage ridge_apply(const RidgeDenoiser& denoiser, const ComplexImage& x_t,
                         int t_index, const BridgeSchedule& schedule) {
  if (t_index < 0 || t_index > schedule.n_steps())
    throw std::out_of_range("ridge_apply: t_index out of range");
  return denoiser.apply(x_t, schedule.alpha[static_cast<std::size_t>(t_index)]);
}

DenoiserFn make_denoiser(GaussianPairModel model) {
  model.validate();
  return [model = std::move(model)](const ComplexImage& x_t, const BridgePoint& point) {
    return gaussian_mmse(model, x_t, point.alpha, point.sigma);
  };
}

DenoiserFn make_denoiser(RidgeDenoiser denoiser) {
  return [d = std::move(denoiser)](const ComplexImage& x_t, const BridgePoint& point) {
    return d.apply(x_t, point.alpha);
  };
}

}  // namespace adobi
