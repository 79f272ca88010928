#include "adobi/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace adobi {
namespace {

// fftw planning is not thread safe; executing a plan on new arrays is.
std::mutex g_plan_mutex;

fftw_plan plan_for(int height, int width, int sign) {
  static std::map<std::tuple<int, int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  const auto key = std::make_tuple(height, width, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  // FFTW_UNALIGNED lets the plan run on any heap buffer via the new-array
  // API. The plan is out-of-place, matching how it is executed.
  std::vector<std::complex<double>> in(static_cast<std::size_t>(height) * width);
  std::vector<std::complex<double>> out(in.size());
  fftw_plan plan = fftw_plan_dft_2d(
      height, width, reinterpret_cast<fftw_complex*>(in.data()),
      reinterpret_cast<fftw_complex*>(out.data()), sign,
      FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, plan);
  return plan;
}

ComplexImage transform(const ComplexImage& x, int sign) {
  ComplexImage out(x.height(), x.width());
  fftw_plan plan = plan_for(x.height(), x.width(), sign);
  // Out-of-place c2c execution leaves the input untouched.
  fftw_execute_dft(plan,
                   reinterpret_cast<fftw_complex*>(const_cast<Complex*>(x.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / std::sqrt(static_cast<double>(x.size()));
  Complex* p = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) p[i] *= scale;
  return out;
}

}  // namespace

ComplexImage fft2(const ComplexImage& x) { return transform(x, FFTW_FORWARD); }

ComplexImage ifft2(const ComplexImage& x) { return transform(x, FFTW_BACKWARD); }

namespace {

ComplexImage circshift(const ComplexImage& x, int dr, int dc) {
  ComplexImage out(x.height(), x.width());
  for (int r = 0; r < x.height(); ++r) {
    const int rr = (r + dr) % x.height();
    for (int c = 0; c < x.width(); ++c)
      out.at(rr, (c + dc) % x.width()) = x.at(r, c);
  }
  return out;
}

}  // namespace

ComplexImage fftshift(const ComplexImage& x) {
  return circshift(x, x.height() / 2, x.width() / 2);
}

ComplexImage ifftshift(const ComplexImage& x) {
  return circshift(x, x.height() - x.height() / 2, x.width() - x.width() / 2);
}

ComplexImage fft2c(const ComplexImage& x) { return fftshift(fft2(ifftshift(x))); }

ComplexImage ifft2c(const ComplexImage& x) { return fftshift(ifft2(ifftshift(x))); }

}  // namespace adobi
