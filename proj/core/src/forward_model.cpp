#include "adobi/forward_model.hpp"

#include <algorithm>
#include <cmath>

#include "adobi/fft.hpp"
#include "adobi/rng.hpp"

namespace adobi {

ForwardOperator::ForwardOperator(SensitivityMaps maps, SamplingMask mask)
    : maps_(std::move(maps)), mask_(std::move(mask)) {
  if (maps_.height() != mask_.height() || maps_.width() != mask_.width())
    throw DimensionError("ForwardOperator: maps and mask shapes differ");
}

MultiCoilKSpace ForwardOperator::forward(const ComplexImage& x) const {
  if (x.height() != maps_.height() || x.width() != maps_.width())
    throw DimensionError("ForwardOperator::forward: image shape mismatch");
  std::vector<ComplexImage> planes;
  planes.reserve(static_cast<std::size_t>(maps_.n_coils()));
  for (int i = 0; i < maps_.n_coils(); ++i)
    planes.push_back(mask_.apply(fft2c(hadamard(maps_.map(i), x))));
  return MultiCoilKSpace(std::move(planes), mask_);
}

ComplexImage ForwardOperator::adjoint(const MultiCoilKSpace& y) const {
  if (y.n_coils() != maps_.n_coils())
    throw DimensionError("ForwardOperator::adjoint: coil count mismatch");
  if (y.height() != maps_.height() || y.width() != maps_.width())
    throw DimensionError("ForwardOperator::adjoint: k-space shape mismatch");
  ComplexImage acc(maps_.height(), maps_.width());
  for (int i = 0; i < maps_.n_coils(); ++i) {
    const ComplexImage coil = conj_hadamard(maps_.map(i), ifft2c(y.plane(i)));
    Complex* pa = acc.data();
    const Complex* pc = coil.data();
    for (std::size_t k = 0; k < acc.size(); ++k) pa[k] += pc[k];
  }
  return acc;
}

ComplexImage ForwardOperator::normal(const ComplexImage& x) const {
  return adjoint(forward(x));
}

double ForwardOperator::data_residual(const ComplexImage& x,
                                      const MultiCoilKSpace& y) const {
  const MultiCoilKSpace ax = forward(x);
  if (ax.n_coils() != y.n_coils())
    throw DimensionError("data_residual: coil count mismatch");
  double acc = 0.0;
  for (int i = 0; i < y.n_coils(); ++i) {
    const Complex* pa = ax.plane(i).data();
    const Complex* py = y.plane(i).data();
    for (std::size_t k = 0; k < ax.plane(i).size(); ++k)
      acc += std::norm(py[k] - pa[k]);
  }
  return std::sqrt(acc);
}

double ForwardOperator::operator_norm_estimate(int iterations,
                                               std::uint64_t seed) const {
  rng::Stream stream(seed, rng::Purpose::kPowerIteration);
  ComplexImage v(maps_.height(), maps_.width());
  for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] = stream.cgaussian();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double n = norm2(v);
    if (n == 0.0) return 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) v.data()[i] /= n;
    const ComplexImage w = normal(v);
    lambda = inner_product(v, w).real();  // Rayleigh quotient, <= lambda_max
    v = w;
  }
  return std::sqrt(std::max(lambda, 0.0));
}

SamplingMask make_cartesian_mask(int height, int width, int acceleration,
                                 int acs_width, std::uint64_t seed,
                                 MaskStyle style) {
  if (height <= 0 || width <= 0)
    throw ConfigError("make_cartesian_mask: dimensions must be positive");
  if (acceleration < 1)
    throw ConfigError("make_cartesian_mask: acceleration must be >= 1");
  if (acceleration > width)
    throw ConfigError("make_cartesian_mask: acceleration exceeds width");
  if (acs_width < 1 || acs_width > width)
    throw ConfigError("make_cartesian_mask: acs_width must be in [1, width]");

  const int acs_start = width / 2 - acs_width / 2;
  std::vector<std::uint8_t> kept(static_cast<std::size_t>(width), 0);
  for (int c = acs_start; c < acs_start + acs_width; ++c)
    kept[static_cast<std::size_t>(c)] = 1;

  if (style == MaskStyle::kEquispaced) {
    // Align the grid with the center column so the ACS sits on-grid.
    const int residue = (width / 2) % acceleration;
    for (int c = residue; c < width; c += acceleration)
      kept[static_cast<std::size_t>(c)] = 1;
  } else {
    const int target = std::max<int>(
        static_cast<int>(std::llround(static_cast<double>(width) / acceleration)),
        acs_width);
    std::vector<int> pool;
    for (int c = 0; c < width; ++c)
      if (!kept[static_cast<std::size_t>(c)]) pool.push_back(c);
    int extra = target - acs_width;
    rng::Stream stream(seed, rng::Purpose::kMaskColumns);
    // Partial Fisher-Yates over the non-ACS pool.
    for (int k = 0; k < extra && !pool.empty(); ++k) {
      const std::uint32_t j =
          k + stream.below(static_cast<std::uint32_t>(pool.size() - k));
      std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
      kept[static_cast<std::size_t>(pool[static_cast<std::size_t>(k)])] = 1;
    }
  }

  std::vector<int> kept_columns;
  for (int c = 0; c < width; ++c)
    if (kept[static_cast<std::size_t>(c)]) kept_columns.push_back(c);
  return SamplingMask(height, width, std::move(kept_columns), acs_width);
}

MultiCoilKSpace add_measurement_noise(const MultiCoilKSpace& y, double level,
                                      std::uint64_t seed) {
  if (level < 0.0)
    throw ConfigError("add_measurement_noise: level must be >= 0");
  if (level == 0.0) return y;

  const SamplingMask& mask = y.mask();
  rng::Stream stream(seed, rng::Purpose::kMeasurementNoise);
  std::vector<ComplexImage> noise;
  noise.reserve(static_cast<std::size_t>(y.n_coils()));
  double noise_norm_sq = 0.0;
  for (int i = 0; i < y.n_coils(); ++i) {
    ComplexImage plane(y.height(), y.width());
    for (int r = 0; r < y.height(); ++r)
      for (int c : mask.kept_columns()) {
        const Complex e = stream.cgaussian();
        plane.at(r, c) = e;
        noise_norm_sq += std::norm(e);
      }
    noise.push_back(std::move(plane));
  }
  const double noise_norm = std::sqrt(noise_norm_sq);
  const double scale = noise_norm > 0.0 ? level * norm2(y) / noise_norm : 0.0;

  std::vector<ComplexImage> out;
  out.reserve(noise.size());
  for (int i = 0; i < y.n_coils(); ++i)
    out.push_back(cimage_axpy(scale, noise[static_cast<std::size_t>(i)], y.plane(i)));
  return MultiCoilKSpace(std::move(out), mask);
}

}  // namespace adobi
