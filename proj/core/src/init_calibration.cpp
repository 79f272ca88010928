#include "adobi/init_calibration.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>

#include "adobi/fft.hpp"
#include "adobi/forward_model.hpp"

namespace adobi {
namespace {

struct GridPattern {
  int acceleration = 1;
  int residue = 0;
};

// Derives the equispaced undersampling grid from the mask, or throws when
// the non-ACS kept columns are not equispaced.
std::optional<GridPattern> infer_grid(const SamplingMask& mask) {
  if (mask.full()) return std::nullopt;  // nothing missing
  const int acs_lo = mask.acs_start();
  const int acs_hi = acs_lo + mask.acs_width();
  std::vector<int> grid_cols;
  for (int c : mask.kept_columns())
    if (c < acs_lo || c >= acs_hi) grid_cols.push_back(c);
  if (grid_cols.size() < 2)
    throw CalibrationError(
        "grappa: need at least two acquired columns outside the ACS block");
  int step = mask.width();
  for (std::size_t i = 1; i < grid_cols.size(); ++i)
    step = std::min(step, grid_cols[i] - grid_cols[i - 1]);
  if (step < 2)
    throw CalibrationError("grappa: offset pattern mismatch (mask not equispaced)");
  const int residue = grid_cols[0] % step;
  for (int c : grid_cols)
    if (c % step != residue)
      throw CalibrationError("grappa: offset pattern mismatch (mask not equispaced)");
  for (int c = residue; c < mask.width(); c += step) {
    if (c >= acs_lo && c < acs_hi) continue;
    if (!mask.keeps(c))
      throw CalibrationError("grappa: offset pattern mismatch (grid column missing)");
  }
  return GridPattern{step, residue};
}

inline Complex sample_or_zero(const ComplexImage& plane, int r, int c) {
  if (r < 0 || r >= plane.height() || c < 0 || c >= plane.width())
    return Complex(0.0, 0.0);
  return plane.at(r, c);
}

// Source column offsets in units of the grid step, e.g. {-1, 0, 1, 2} for
// four column taps.
std::vector<int> column_taps(int kernel_cols) {
  std::vector<int> taps;
  const int lo = -((kernel_cols - 1) / 2);
  for (int j = 0; j < kernel_cols; ++j) taps.push_back(lo + j);
  return taps;
}

}  // namespace

ComplexImage zero_filled_init(const MultiCoilKSpace& y, const SensitivityMaps& maps) {
  return ForwardOperator(maps, y.mask()).adjoint(y);
}

GrappaKernel grappa_calibrate(const MultiCoilKSpace& y, int kernel_rows,
                              int kernel_cols, double tikhonov) {
  if (kernel_rows < 1 || kernel_rows % 2 == 0)
    throw ConfigError("grappa_calibrate: kernel_rows must be odd and >= 1");
  if (kernel_cols < 1)
    throw ConfigError("grappa_calibrate: kernel_cols must be >= 1");
  if (tikhonov < 0.0)
    throw ConfigError("grappa_calibrate: tikhonov must be >= 0");

  GrappaKernel kernel;
  kernel.kernel_rows = kernel_rows;
  kernel.kernel_cols = kernel_cols;
  kernel.n_coils = y.n_coils();

  const auto grid = infer_grid(y.mask());
  if (!grid) return kernel;  // fully sampled: empty weight set
  kernel.acceleration = grid->acceleration;
  kernel.grid_residue = grid->residue;

  const SamplingMask& mask = y.mask();
  const int height = y.height();
  const int n_coils = y.n_coils();
  const int taps = kernel.taps();
  const int acs_lo = mask.acs_start();
  const int acs_hi = acs_lo + mask.acs_width();
  const int row_half = (kernel_rows - 1) / 2;
  const std::vector<int> col_taps = column_taps(kernel_cols);
  const int step = grid->acceleration;

  for (int d = 1; d < step; ++d) {
    // Calibration equations: every ACS position that sits at offset d from
    // the grid plays the missing line, its true value the regression target.
    std::vector<int> target_cols;
    for (int c = acs_lo; c < acs_hi; ++c)
      if (((c - grid->residue) % step + step) % step == d) target_cols.push_back(c);

    const long n_eq = static_cast<long>(target_cols.size()) * height;
    if (n_eq < taps)
      throw CalibrationError(
          "grappa: ACS too small: " + std::to_string(n_eq) + " equations for " +
          std::to_string(taps) + " taps; need ACS width of at least " +
          std::to_string((taps + height - 1) / height * step) + " columns");

    Eigen::MatrixXcd sources(n_eq, taps);
    Eigen::MatrixXcd targets(n_eq, n_coils);
    long row_index = 0;
    for (int c : target_cols) {
      const int left = c - d;
      for (int r = 0; r < height; ++r, ++row_index) {
        int tap = 0;
        for (int sc = 0; sc < n_coils; ++sc)
          for (int dr = -row_half; dr <= row_half; ++dr)
            for (int j : col_taps)
              sources(row_index, tap++) =
                  sample_or_zero(y.plane(sc), r + dr, left + j * step);
        for (int tc = 0; tc < n_coils; ++tc)
          targets(row_index, tc) = y.plane(tc).at(r, c);
      }
    }

    Eigen::MatrixXcd solution(taps, n_coils);
    if (tikhonov > 0.0) {
      Eigen::MatrixXcd gram = sources.adjoint() * sources;
      const double ridge = tikhonov * gram.diagonal().real().mean();
      gram.diagonal().array() += ridge;
      solution = gram.ldlt().solve(sources.adjoint() * targets);
    } else {
      solution = sources.colPivHouseholderQr().solve(targets);
    }

    const double target_norm = targets.norm();
    const double residual = (sources * solution - targets).norm();
    kernel.fit_residual.push_back(target_norm > 0.0 ? residual / target_norm : 0.0);

    std::vector<Complex> flat(static_cast<std::size_t>(n_coils) * taps);
    for (int tc = 0; tc < n_coils; ++tc)
      for (int t = 0; t < taps; ++t)
        flat[static_cast<std::size_t>(tc) * taps + t] = solution(t, tc);
    kernel.weights.push_back(std::move(flat));
  }
  return kernel;
}

MultiCoilKSpace grappa_fill(const GrappaKernel& kernel, const MultiCoilKSpace& y) {
  if (kernel.empty()) return y;
  if (kernel.n_coils != y.n_coils())
    throw CalibrationError("grappa_fill: coil count mismatch");
  const auto grid = infer_grid(y.mask());
  if (!grid) return y;
  if (grid->acceleration != kernel.acceleration ||
      grid->residue != kernel.grid_residue)
    throw CalibrationError("grappa_fill: offset pattern mismatch");

  const SamplingMask& mask = y.mask();
  const int height = y.height();
  const int width = y.width();
  const int n_coils = y.n_coils();
  const int step = kernel.acceleration;
  const int row_half = (kernel.kernel_rows - 1) / 2;
  const std::vector<int> col_taps = column_taps(kernel.kernel_cols);
  const int taps = kernel.taps();

  std::vector<ComplexImage> filled = y.planes();
  for (int c = 0; c < width; ++c) {
    if (mask.keeps(c)) continue;  // acquired columns pass through untouched
    const int d = ((c - kernel.grid_residue) % step + step) % step;
    if (d == 0)
      throw CalibrationError("grappa_fill: offset pattern mismatch (grid hole)");
    const int left = c - d;
    const std::vector<Complex>& w = kernel.weights[static_cast<std::size_t>(d - 1)];
    for (int r = 0; r < height; ++r) {
      // Gather the shared source vector once per position.
      std::vector<Complex> src(static_cast<std::size_t>(taps));
      int tap = 0;
      for (int sc = 0; sc < n_coils; ++sc)
        for (int dr = -row_half; dr <= row_half; ++dr)
          for (int j : col_taps)
            src[static_cast<std::size_t>(tap++)] =
                sample_or_zero(y.plane(sc), r + dr, left + j * step);
      for (int tc = 0; tc < n_coils; ++tc) {
        Complex acc(0.0, 0.0);
        const Complex* wrow = w.data() + static_cast<std::size_t>(tc) * taps;
        for (int t = 0; t < taps; ++t) acc += wrow[t] * src[static_cast<std::size_t>(t)];
        filled[static_cast<std::size_t>(tc)].at(r, c) = acc;
      }
    }
  }

  std::vector<int> all_columns(static_cast<std::size_t>(width));
  for (int c = 0; c < width; ++c) all_columns[static_cast<std::size_t>(c)] = c;
  SamplingMask full(height, width, std::move(all_columns), mask.acs_width());
  return MultiCoilKSpace(std::move(filled), std::move(full));
}

ComplexImage grappa_apply(const GrappaKernel& kernel, const MultiCoilKSpace& y,
                          const SensitivityMaps* maps) {
  const MultiCoilKSpace filled = grappa_fill(kernel, y);
  if (maps != nullptr)
    return ForwardOperator(*maps, filled.mask()).adjoint(filled);
  // Root-sum-of-squares magnitude combine.
  ComplexImage out(y.height(), y.width());
  std::vector<double> acc(out.size(), 0.0);
  for (int i = 0; i < filled.n_coils(); ++i) {
    const ComplexImage coil = ifft2c(filled.plane(i));
    const Complex* p = coil.data();
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += std::norm(p[k]);
  }
  for (std::size_t k = 0; k < acc.size(); ++k)
    out.data()[k] = Complex(std::sqrt(acc[k]), 0.0);
  return out;
}

SensitivityMaps estimate_csm_from_acs(const MultiCoilKSpace& y,
                                      int smoothing_width) {
  const SamplingMask& mask = y.mask();
  if (smoothing_width < 0)
    throw ConfigError("estimate_csm_from_acs: smoothing_width must be >= 0");
  int window = mask.acs_width();
  if (smoothing_width > 0) window = std::min(window, smoothing_width);
  const int lo = mask.width() / 2 - window / 2;

  // Hann taper across the windowed columns, peaked at the center column.
  std::vector<double> taper(static_cast<std::size_t>(window));
  for (int k = 0; k < window; ++k)
    taper[static_cast<std::size_t>(k)] =
        0.5 - 0.5 * std::cos(2.0 * M_PI * (k + 0.5) / window);

  std::vector<ComplexImage> lowres;
  lowres.reserve(static_cast<std::size_t>(y.n_coils()));
  double energy = 0.0;
  for (int i = 0; i < y.n_coils(); ++i) {
    ComplexImage plane(y.height(), y.width());
    for (int r = 0; r < y.height(); ++r)
      for (int k = 0; k < window; ++k) {
        const Complex v = y.plane(i).at(r, lo + k) * taper[static_cast<std::size_t>(k)];
        plane.at(r, lo + k) = v;
        energy += std::norm(v);
      }
    lowres.push_back(ifft2c(plane));
  }
  if (energy == 0.0)
    throw CalibrationError("estimate_csm_from_acs: ACS region is all zero");

  std::vector<double> rss(lowres[0].size(), 0.0);
  for (const auto& img : lowres) {
    const Complex* p = img.data();
    for (std::size_t k = 0; k < rss.size(); ++k) rss[k] += std::norm(p[k]);
  }
  for (double& v : rss) v = std::sqrt(v);

  constexpr double kFloor = 1e-8;
  for (auto& img : lowres) {
    Complex* p = img.data();
    for (std::size_t k = 0; k < rss.size(); ++k) p[k] /= std::max(rss[k], kFloor);
  }
  return SensitivityMaps(std::move(lowres)).normalize();
}

}  // namespace adobi
