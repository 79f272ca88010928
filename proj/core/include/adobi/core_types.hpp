#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include "adobi/errors.hpp"

namespace adobi {

using Complex = std::complex<double>;

// Dense row-major 2-D complex array. One representation serves images, coil
// maps, and per-coil k-space planes. Value semantics throughout; operators
// never mutate their inputs, so instances are safe to share across workers.
class ComplexImage {
 public:
  ComplexImage() = default;
  ComplexImage(int height, int width);
  ComplexImage(int height, int width, std::vector<Complex> data);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool same_shape(const ComplexImage& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }

  Complex& at(int row, int col) { return data_[index(row, col)]; }
  const Complex& at(int row, int col) const { return data_[index(row, col)]; }
  Complex* data() { return data_.data(); }
  const Complex* data() const { return data_.data(); }
  const std::vector<Complex>& values() const { return data_; }

 private:
  std::size_t index(int row, int col) const {
    return static_cast<std::size_t>(row) * width_ + col;
  }
  int height_ = 0;
  int width_ = 0;
  std::vector<Complex> data_;
};

// Cartesian phase-encode mask: a set of kept columns, always including a
// centered block of acs_width auto-calibration columns. Applying the mask is
// a projection (applying twice equals applying once).
class SamplingMask {
 public:
  SamplingMask(int height, int width, std::vector<int> kept_columns,
               int acs_width);

  int height() const { return height_; }
  int width() const { return width_; }
  int acs_width() const { return acs_width_; }
  int acs_start() const { return width_ / 2 - acs_width_ / 2; }
  bool keeps(int col) const { return kept_flag_[static_cast<std::size_t>(col)] != 0; }
  const std::vector<int>& kept_columns() const { return kept_; }
  int n_kept() const { return static_cast<int>(kept_.size()); }
  bool full() const { return n_kept() == width_; }

  // Zeroes every column not in kept_columns.
  ComplexImage apply(const ComplexImage& plane) const;

 private:
  int height_ = 0;
  int width_ = 0;
  int acs_width_ = 0;
  std::vector<int> kept_;             // sorted, unique
  std::vector<std::uint8_t> kept_flag_;
};

// Stack of per-coil sensitivity maps, all sharing one shape. When the
// normalized flag is set, sum_i |S_i(p)|^2 = 1 at every supported pixel.
class SensitivityMaps {
 public:
  explicit SensitivityMaps(std::vector<ComplexImage> maps, bool normalized = false);

  int n_coils() const { return static_cast<int>(maps_.size()); }
  int height() const { return maps_[0].height(); }
  int width() const { return maps_[0].width(); }
  const ComplexImage& map(int coil) const { return maps_[static_cast<std::size_t>(coil)]; }
  const std::vector<ComplexImage>& maps() const { return maps_; }
  bool is_normalized() const { return normalized_; }

  // Root-sum-of-squares magnitude per pixel.
  std::vector<double> rss() const;

  // Divides each pixel by its RSS where RSS > support_eps; pixels without
  // support are left as they are. Result carries the normalized flag.
  SensitivityMaps normalize(double support_eps = 1e-12) const;

  // max over supported pixels of |RSS - 1|; for checking the invariant.
  double normalization_defect(double support_eps = 1e-12) const;

 private:
  std::vector<ComplexImage> maps_;
  bool normalized_ = false;
};

// Multi-coil k-space measurement plus the mask that produced it. The
// constructor projects the planes through the mask, so every plane is zero
// on dropped columns by construction.
class MultiCoilKSpace {
 public:
  MultiCoilKSpace(std::vector<ComplexImage> planes, SamplingMask mask);

  int n_coils() const { return static_cast<int>(planes_.size()); }
  int height() const { return mask_.height(); }
  int width() const { return mask_.width(); }
  const ComplexImage& plane(int coil) const { return planes_[static_cast<std::size_t>(coil)]; }
  const std::vector<ComplexImage>& planes() const { return planes_; }
  const SamplingMask& mask() const { return mask_; }

 private:
  std::vector<ComplexImage> planes_;
  SamplingMask mask_;
};

// a*x + y elementwise.
ComplexImage cimage_axpy(Complex a, const ComplexImage& x, const ComplexImage& y);

// sum_p conj(x_p) * y_p.
Complex inner_product(const ComplexImage& x, const ComplexImage& y);

double norm2(const ComplexImage& x);
double norm2(const MultiCoilKSpace& y);
double norm2(const SensitivityMaps& maps);
Complex inner_product(const MultiCoilKSpace& x, const MultiCoilKSpace& y);

double max_abs(const ComplexImage& x);
bool all_finite(const ComplexImage& x);

// Pointwise product helpers used by the measurement operator.
ComplexImage hadamard(const ComplexImage& a, const ComplexImage& b);
ComplexImage conj_hadamard(const ComplexImage& a, const ComplexImage& b);  // conj(a)*b

}  // namespace adobi
