#include "adobi/core_types.hpp"

#include <algorithm>
#include <cmath>

namespace adobi {

ComplexImage::ComplexImage(int height, int width)
    : height_(height), width_(width) {
  if (height <= 0 || width <= 0)
    throw DimensionError("ComplexImage: height and width must be positive");
  data_.assign(static_cast<std::size_t>(height) * width, Complex(0.0, 0.0));
}

ComplexImage::ComplexImage(int height, int width, std::vector<Complex> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height <= 0 || width <= 0)
    throw DimensionError("ComplexImage: height and width must be positive");
  if (data_.size() != static_cast<std::size_t>(height) * width)
    throw DimensionError("ComplexImage: data length does not match height*width");
}

SamplingMask::SamplingMask(int height, int width, std::vector<int> kept_columns,
                           int acs_width)
    : height_(height), width_(width), acs_width_(acs_width),
      kept_(std::move(kept_columns)) {
  if (height <= 0 || width <= 0)
    throw DimensionError("SamplingMask: height and width must be positive");
  if (acs_width < 1 || acs_width > width)
    throw ConfigError("SamplingMask: acs_width must be in [1, width]");
  std::sort(kept_.begin(), kept_.end());
  kept_.erase(std::unique(kept_.begin(), kept_.end()), kept_.end());
  for (int col : kept_)
    if (col < 0 || col >= width)
      throw ConfigError("SamplingMask: kept column out of range");
  kept_flag_.assign(static_cast<std::size_t>(width), 0);
  for (int col : kept_) kept_flag_[static_cast<std::size_t>(col)] = 1;
  const int start = acs_start();
  for (int col = start; col < start + acs_width_; ++col)
    if (!keeps(col))
      throw ConfigError("SamplingMask: centered ACS block must be kept");
}

ComplexImage SamplingMask::apply(const ComplexImage& plane) const {
  if (plane.height() != height_ || plane.width() != width_)
    throw DimensionError("SamplingMask::apply: shape mismatch");
  ComplexImage out(height_, width_);
  for (int r = 0; r < height_; ++r)
    for (int c = 0; c < width_; ++c)
      if (kept_flag_[static_cast<std::size_t>(c)]) out.at(r, c) = plane.at(r, c);
  return out;
}

SensitivityMaps::SensitivityMaps(std::vector<ComplexImage> maps, bool normalized)
    : maps_(std::move(maps)), normalized_(normalized) {
  if (maps_.empty()) throw DimensionError("SensitivityMaps: need at least one coil");
  for (const auto& m : maps_)
    if (!m.same_shape(maps_[0]))
      throw DimensionError("SensitivityMaps: all maps must share one shape");
}

std::vector<double> SensitivityMaps::rss() const {
  std::vector<double> out(maps_[0].size(), 0.0);
  for (const auto& m : maps_) {
    const Complex* p = m.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += std::norm(p[i]);
  }
  for (double& v : out) v = std::sqrt(v);
  return out;
}

SensitivityMaps SensitivityMaps::normalize(double support_eps) const {
  const std::vector<double> r = rss();
  std::vector<ComplexImage> out = maps_;
  for (auto& m : out) {
    Complex* p = m.data();
    for (std::size_t i = 0; i < r.size(); ++i)
      if (r[i] > support_eps) p[i] /= r[i];
  }
  return SensitivityMaps(std::move(out), true);
}

double SensitivityMaps::normalization_defect(double support_eps) const {
  const std::vector<double> r = rss();
  double worst = 0.0;
  for (double v : r)
    if (v > support_eps) worst = std::max(worst, std::abs(v - 1.0));
  return worst;
}

MultiCoilKSpace::MultiCoilKSpace(std::vector<ComplexImage> planes, SamplingMask mask)
    : planes_(std::move(planes)), mask_(std::move(mask)) {
  if (planes_.empty()) throw DimensionError("MultiCoilKSpace: need at least one coil");
  for (auto& p : planes_) {
    if (p.height() != mask_.height() || p.width() != mask_.width())
      throw DimensionError("MultiCoilKSpace: plane shape does not match mask");
    if (!mask_.full()) p = mask_.apply(p);
  }
}

ComplexImage cimage_axpy(Complex a, const ComplexImage& x, const ComplexImage& y) {
  if (!x.same_shape(y)) throw DimensionError("cimage_axpy: shape mismatch");
  ComplexImage out(x.height(), x.width());
  const Complex* px = x.data();
  const Complex* py = y.data();
  Complex* po = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) po[i] = a * px[i] + py[i];
  return out;
}

Complex inner_product(const ComplexImage& x, const ComplexImage& y) {
  if (!x.same_shape(y)) throw DimensionError("inner_product: shape mismatch");
  Complex acc(0.0, 0.0);
  const Complex* px = x.data();
  const Complex* py = y.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::conj(px[i]) * py[i];
  return acc;
}

double norm2(const ComplexImage& x) {
  double acc = 0.0;
  const Complex* p = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) acc += std::norm(p[i]);
  return std::sqrt(acc);
}

double norm2(const MultiCoilKSpace& y) {
  double acc = 0.0;
  for (const auto& plane : y.planes()) {
    const Complex* p = plane.data();
    for (std::size_t i = 0; i < plane.size(); ++i) acc += std::norm(p[i]);
  }
  return std::sqrt(acc);
}

double norm2(const SensitivityMaps& maps) {
  double acc = 0.0;
  for (const auto& m : maps.maps()) {
    const Complex* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) acc += std::norm(p[i]);
  }
  return std::sqrt(acc);
}

Complex inner_product(const MultiCoilKSpace& x, const MultiCoilKSpace& y) {
  if (x.n_coils() != y.n_coils())
    throw DimensionError("inner_product: coil count mismatch");
  Complex acc(0.0, 0.0);
  for (int i = 0; i < x.n_coils(); ++i) acc += inner_product(x.plane(i), y.plane(i));
  return acc;
}

double max_abs(const ComplexImage& x) {
  double m = 0.0;
  const Complex* p = x.data();
  for (std::size_t i = 0; i < x.size(); ++i) m = std::max(m, std::abs(p[i]));
  return m;
}

bool all_finite(const ComplexImage& x) {
  const Complex* p = x.data();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!std::isfinite(p[i].real()) || !std::isfinite(p[i].imag())) return false;
  return true;
}

ComplexImage hadamard(const ComplexImage& a, const ComplexImage& b) {
  if (!a.same_shape(b)) throw DimensionError("hadamard: shape mismatch");
  ComplexImage out(a.height(), a.width());
  const Complex* pa = a.data();
  const Complex* pb = b.data();
  Complex* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = pa[i] * pb[i];
  return out;
}

ComplexImage conj_hadamard(const ComplexImage& a, const ComplexImage& b) {
  if (!a.same_shape(b)) throw DimensionError("conj_hadamard: shape mismatch");
  ComplexImage out(a.height(), a.width());
  const Complex* pa = a.data();
  const Complex* pb = b.data();
  Complex* po = out.data();
  for (std::size_t i = 0; i < a.size(); ++i) po[i] = std::conj(pa[i]) * pb[i];
  return out;
}

}  // namespace adobi
