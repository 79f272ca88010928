#include "adobi/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "adobi/fft.hpp"
#include "adobi/rng.hpp"

namespace adobi {
namespace {

struct Ellipse {
  double cx, cy;      // center, normalized coordinates
  double ax, ay;      // semi-axes
  double angle;
  double intensity;
};

// Coverage of one pixel by the ellipse, 3x3 supersampled.
double coverage(const Ellipse& e, double u, double v, double pixel) {
  const double cs = std::cos(e.angle);
  const double sn = std::sin(e.angle);
  double hit = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double uu = u + ((i + 0.5) / 3.0 - 0.5) * pixel;
      const double vv = v + ((j + 0.5) / 3.0 - 0.5) * pixel;
      const double du = uu - e.cx;
      const double dv = vv - e.cy;
      const double ru = (du * cs + dv * sn) / e.ax;
      const double rv = (-du * sn + dv * cs) / e.ay;
      if (ru * ru + rv * rv <= 1.0) hit += 1.0;
    }
  return hit / 9.0;
}

}  // namespace

ComplexImage make_phantom(const PhantomSpec& spec) {
  if (spec.size < 16) throw ConfigError("make_phantom: size must be >= 16");
  if (spec.n_ellipses < 1) throw ConfigError("make_phantom: n_ellipses must be >= 1");
  if (!(spec.intensity_min > 0.0) || spec.intensity_max < spec.intensity_min)
    throw ConfigError("make_phantom: invalid intensity range");

  rng::Stream stream(spec.seed, rng::Purpose::kPhantom);
  std::vector<Ellipse> ellipses;
  // Background disk, centered; its radius is seeded but it stays a circle so
  // a single-ellipse phantom is radially symmetric.
  {
    const double radius = 0.70 + 0.15 * stream.uniform();
    ellipses.push_back({0.0, 0.0, radius, radius, 0.0, 1.0});
  }
  for (int k = 1; k < spec.n_ellipses; ++k) {
    Ellipse e;
    const double rho = 0.55 * std::sqrt(stream.uniform());
    const double theta = 2.0 * M_PI * stream.uniform();
    e.cx = rho * std::cos(theta);
    e.cy = rho * std::sin(theta);
    e.ax = 0.08 + 0.27 * stream.uniform();
    e.ay = 0.08 + 0.27 * stream.uniform();
    e.angle = M_PI * stream.uniform();
    const double magnitude =
        spec.intensity_min + (spec.intensity_max - spec.intensity_min) * stream.uniform();
    e.intensity = stream.uniform() < 0.35 ? -magnitude : magnitude;
    ellipses.push_back(e);
  }
  const double ramp_u = spec.phase_ramp * (2.0 * stream.uniform() - 1.0);
  const double ramp_v = spec.phase_ramp * (2.0 * stream.uniform() - 1.0);

  const int n = spec.size;
  const double pixel = 2.0 / n;
  ComplexImage out(n, n);
  double peak = 0.0;
  for (int r = 0; r < n; ++r) {
    // Normalized coordinates with the grid center at (0, 0).
    const double v = (2.0 * r - (n - 1)) / n;
    for (int c = 0; c < n; ++c) {
      const double u = (2.0 * c - (n - 1)) / n;
      double value = 0.0;
      for (const Ellipse& e : ellipses) value += e.intensity * coverage(e, u, v, pixel);
      const double phase = ramp_u * u + ramp_v * v;
      out.at(r, c) = value * Complex(std::cos(phase), std::sin(phase));
      peak = std::max(peak, std::abs(value));
    }
  }
  if (peak > 0.0) {
    Complex* p = out.data();
    for (std::size_t i = 0; i < out.size(); ++i) p[i] /= peak;
  }
  return out;
}

namespace {

ComplexImage lowpass_project(const ComplexImage& img, int bandlimit) {
  ComplexImage spectrum = fft2(img);
  const int h = img.height();
  const int w = img.width();
  for (int r = 0; r < h; ++r) {
    const int fr = std::min(r, h - r);  // distance to DC along rows
    for (int c = 0; c < w; ++c) {
      const int fc = std::min(c, w - c);
      if (fr > bandlimit || fc > bandlimit) spectrum.at(r, c) = Complex(0, 0);
    }
  }
  return ifft2(spectrum);
}

// Smooth unit-RMS complex field from a few low-order harmonics.
ComplexImage smooth_field(int height, int width, rng::Stream& stream) {
  ComplexImage field(height, width);
  constexpr int kOrder = 2;
  std::vector<Complex> coeff;
  for (int ky = -kOrder; ky <= kOrder; ++ky)
    for (int kx = -kOrder; kx <= kOrder; ++kx) coeff.push_back(stream.cgaussian());
  std::size_t idx = 0;
  for (int ky = -kOrder; ky <= kOrder; ++ky)
    for (int kx = -kOrder; kx <= kOrder; ++kx, ++idx) {
      const Complex a = coeff[idx];
      for (int r = 0; r < height; ++r)
        for (int c = 0; c < width; ++c) {
          const double phase =
              2.0 * M_PI * (static_cast<double>(ky) * r / height +
                            static_cast<double>(kx) * c / width);
          field.at(r, c) += a * Complex(std::cos(phase), std::sin(phase));
        }
    }
  const double rms = norm2(field) / std::sqrt(static_cast<double>(field.size()));
  if (rms > 0.0) {
    Complex* p = field.data();
    for (std::size_t i = 0; i < field.size(); ++i) p[i] /= rms;
  }
  return field;
}

SensitivityMaps finalize_maps(std::vector<ComplexImage> maps, bool normalize) {
  SensitivityMaps raw(std::move(maps));
  if (normalize) return raw.normalize();
  // Global scale so the operator norm stays <= 1 without reshaping the maps.
  double peak = 0.0;
  for (double v : raw.rss()) peak = std::max(peak, v);
  if (peak > 0.0) {
    std::vector<ComplexImage> scaled = raw.maps();
    for (auto& m : scaled) {
      Complex* p = m.data();
      for (std::size_t i = 0; i < m.size(); ++i) p[i] /= peak;
    }
    return SensitivityMaps(std::move(scaled), false);
  }
  return raw;
}

}  // namespace

CoilSet make_coils(const CoilModelSpec& spec, int height, int width) {
  if (spec.n_coils < 1) throw ConfigError("make_coils: n_coils must be >= 1");
  if (!(spec.bump_width > 0.0)) throw ConfigError("make_coils: bump_width must be > 0");
  if (height <= 0 || width <= 0)
    throw DimensionError("make_coils: dimensions must be positive");

  rng::Stream geometry(spec.seed, rng::Purpose::kCoils);
  std::vector<ComplexImage> truth;
  truth.reserve(static_cast<std::size_t>(spec.n_coils));
  for (int i = 0; i < spec.n_coils; ++i) {
    const double jitter = (geometry.uniform() - 0.5) * 0.4;
    const double theta = 2.0 * M_PI * (i + jitter) / spec.n_coils;
    const double radius = spec.ring_radius * (0.9 + 0.2 * geometry.uniform());
    const double cx = radius * std::cos(theta);
    const double cy = radius * std::sin(theta);
    const double pa = spec.phase_amplitude * (2.0 * geometry.uniform() - 1.0);
    const double pb = spec.phase_amplitude * (2.0 * geometry.uniform() - 1.0);
    const double pc = spec.phase_amplitude * (2.0 * geometry.uniform() - 1.0);
    const double pd = M_PI * (2.0 * geometry.uniform() - 1.0);

    ComplexImage map(height, width);
    for (int r = 0; r < height; ++r) {
      const double v = (2.0 * r - (height - 1)) / height;
      for (int c = 0; c < width; ++c) {
        const double u = (2.0 * c - (width - 1)) / width;
        const double d2 = (u - cx) * (u - cx) + (v - cy) * (v - cy);
        const double amp = std::exp(-d2 / (2.0 * spec.bump_width * spec.bump_width));
        const double phase = pa * u + pb * v + pc * u * v + pd;
        map.at(r, c) = amp * Complex(std::cos(phase), std::sin(phase));
      }
    }
    if (spec.bandlimit > 0) map = lowpass_project(map, spec.bandlimit);
    truth.push_back(std::move(map));
  }
  SensitivityMaps true_maps = finalize_maps(std::move(truth), spec.normalize);
  if (spec.perturbation == 0.0) return {true_maps, true_maps};

  rng::Stream perturb(spec.perturbation_seed, rng::Purpose::kCoilPerturbation);
  std::vector<ComplexImage> initial;
  initial.reserve(static_cast<std::size_t>(spec.n_coils));
  for (int i = 0; i < spec.n_coils; ++i) {
    const ComplexImage field = smooth_field(height, width, perturb);
    ComplexImage m = true_maps.map(i);
    Complex* pm = m.data();
    const Complex* pf = field.data();
    for (std::size_t k = 0; k < m.size(); ++k)
      pm[k] *= Complex(1.0, 0.0) + spec.perturbation * pf[k];
    initial.push_back(std::move(m));
  }
  SensitivityMaps initial_maps = finalize_maps(std::move(initial), spec.normalize);
  return {std::move(true_maps), std::move(initial_maps)};
}

GaussianPairModel make_gaussian_pair_model(const GaussianPairSpec& spec) {
  if (spec.height <= 0 || spec.width <= 0)
    throw DimensionError("make_gaussian_pair_model: dimensions must be positive");
  if (spec.spectrum_tilt < 0.0 || spec.spectrum_tilt >= 1.0)
    throw ConfigError("make_gaussian_pair_model: spectrum_tilt must be in [0, 1)");
  if (spec.correlation < 0.0 || spec.correlation >= 1.0)
    throw ConfigError("make_gaussian_pair_model: correlation must be in [0, 1)");
  if (!(spec.signal_power > 0.0))
    throw ConfigError("make_gaussian_pair_model: signal_power must be > 0");

  rng::Stream stream(spec.seed, rng::Purpose::kPairDraw, 0xFFFFFFFFu);
  GaussianPairModel m;
  m.height = spec.height;
  m.width = spec.width;
  const std::size_t n = static_cast<std::size_t>(spec.height) * spec.width;
  m.mean0.assign(n, Complex(0, 0));
  m.meanz.assign(n, Complex(0, 0));
  m.var0.assign(n, 0.0);
  m.varz.assign(n, 0.0);
  m.cov0z.assign(n, Complex(0, 0));

  std::size_t f = 0;
  for (int r = 0; r < spec.height; ++r)
    for (int c = 0; c < spec.width; ++c, ++f) {
      // Degree-1 trigonometric modulation: exactly within reach of any
      // patch kernel of radius >= 1.
      const double tilt = spec.spectrum_tilt *
                          std::cos(2.0 * M_PI * r / spec.height) *
                          std::cos(2.0 * M_PI * c / spec.width);
      m.var0[f] = spec.signal_power * (1.0 + tilt);
      m.varz[f] = m.var0[f] * (1.0 + spec.source_extra);
      m.cov0z[f] = spec.correlation * std::sqrt(m.var0[f] * m.varz[f]);
      if (spec.mean_scale > 0.0) {
        const double fr = std::min(r, spec.height - r);
        const double fc = std::min(c, spec.width - c);
        const double decay = std::exp(-(fr * fr + fc * fc) / 8.0);
        m.mean0[f] = spec.mean_scale * decay * stream.cgaussian();
        m.meanz[f] = m.mean0[f] * (0.8 + 0.2 * stream.uniform());
      }
    }
  m.validate();
  return m;
}

}  // namespace adobi
