#include <doctest.h>

#include <cmath>

#include "adobi/core_types.hpp"
#include "adobi/rng.hpp"

using namespace adobi;

namespace {

ComplexImage random_image(int h, int w, std::uint64_t seed, std::uint32_t index = 0) {
  rng::Stream s(seed, rng::Purpose::kGeneric, index);
  ComplexImage img(h, w);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = s.cgaussian();
  return img;
}

}  // namespace

TEST_CASE("cimage_axpy spot values") {
  const ComplexImage x = random_image(4, 5, 1);
  const ComplexImage y = random_image(4, 5, 2);

  // a = 0 returns y, a = 1 onto zeros returns x.
  const ComplexImage zero(4, 5);
  ComplexImage r0 = cimage_axpy(Complex(0, 0), x, y);
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(r0.data()[i] == y.data()[i]);
  ComplexImage r1 = cimage_axpy(Complex(1, 0), x, zero);
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(r1.data()[i] == x.data()[i]);

  // 1x1 hand arithmetic: (2+0i)*(1+1i) + (3+0i) = 5+2i.
  ComplexImage a(1, 1), b(1, 1);
  a.at(0, 0) = Complex(1, 1);
  b.at(0, 0) = Complex(3, 0);
  const ComplexImage r = cimage_axpy(Complex(2, 0), a, b);
  CHECK(r.at(0, 0).real() == doctest::Approx(5.0));
  CHECK(r.at(0, 0).imag() == doctest::Approx(2.0));

  CHECK_THROWS_AS(cimage_axpy(Complex(1, 0), x, random_image(5, 4, 3)),
                  DimensionError);
}

TEST_CASE("inner product convention and brute-force oracle") {
  ComplexImage impulse(3, 3);
  impulse.at(1, 1) = Complex(1, 0);
  const Complex unit = inner_product(impulse, impulse);
  CHECK(unit.real() == doctest::Approx(1.0));
  CHECK(unit.imag() == doctest::Approx(0.0));

  // <[i], [1]> = conj(i) * 1 = -i.
  ComplexImage xi(1, 1), one(1, 1);
  xi.at(0, 0) = Complex(0, 1);
  one.at(0, 0) = Complex(1, 0);
  const Complex v = inner_product(xi, one);
  CHECK(v.real() == doctest::Approx(0.0));
  CHECK(v.imag() == doctest::Approx(-1.0));

  // Independent elementwise summation oracle on a random 8x8 pair.
  const ComplexImage x = random_image(8, 8, 10);
  const ComplexImage y = random_image(8, 8, 11);
  Complex expected(0, 0);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) expected += std::conj(x.at(r, c)) * y.at(r, c);
  const Complex got = inner_product(x, y);
  CHECK(std::abs(got - expected) < 1e-12);
}

TEST_CASE("inner product is conjugate-symmetric (property)") {
  for (std::uint32_t trial = 0; trial < 25; ++trial) {
    rng::Stream shape(99, rng::Purpose::kGeneric, trial);
    const int h = 1 + static_cast<int>(shape.below(12));
    const int w = 1 + static_cast<int>(shape.below(12));
    const ComplexImage x = random_image(h, w, 100, trial);
    const ComplexImage y = random_image(h, w, 101, trial);
    const Complex ab = inner_product(x, y);
    const Complex ba = inner_product(y, x);
    CHECK(std::abs(ab - std::conj(ba)) < 1e-12 * (1.0 + std::abs(ab)));
  }
}

TEST_CASE("sampling mask validation and idempotence") {
  CHECK_THROWS_AS(SamplingMask(8, 8, {0, 9}, 2), ConfigError);      // out of range
  CHECK_THROWS_AS(SamplingMask(8, 8, {0, 1}, 2), ConfigError);      // ACS not kept
  CHECK_THROWS_AS(SamplingMask(0, 8, {0}, 1), DimensionError);

  SamplingMask mask(8, 8, {0, 2, 3, 4, 5, 7}, 2);  // ACS block = cols 3,4
  CHECK(mask.acs_start() == 3);
  CHECK(mask.n_kept() == 6);

  // Projection: applying twice equals applying once, on random k-space.
  for (std::uint32_t trial = 0; trial < 10; ++trial) {
    const ComplexImage k = random_image(8, 8, 200, trial);
    const ComplexImage once = mask.apply(k);
    const ComplexImage twice = mask.apply(once);
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(once.data()[i] == twice.data()[i]);
  }
}

TEST_CASE("sensitivity maps normalization invariant") {
  std::vector<ComplexImage> maps;
  for (int i = 0; i < 4; ++i) maps.push_back(random_image(6, 6, 300, i));
  SensitivityMaps raw(maps);
  CHECK_FALSE(raw.is_normalized());
  const SensitivityMaps normalized = raw.normalize();
  CHECK(normalized.is_normalized());
  CHECK(normalized.normalization_defect() < 1e-6);

  maps.push_back(random_image(5, 6, 300, 9));
  CHECK_THROWS_AS(SensitivityMaps{maps}, DimensionError);
}

TEST_CASE("k-space stack enforces mask support") {
  SamplingMask mask(6, 6, {0, 2, 3, 4}, 2);
  std::vector<ComplexImage> planes{random_image(6, 6, 400), random_image(6, 6, 401)};
  MultiCoilKSpace y(planes, mask);
  for (int i = 0; i < y.n_coils(); ++i)
    for (int r = 0; r < 6; ++r)
      for (int c = 0; c < 6; ++c)
        if (!mask.keeps(c)) CHECK(y.plane(i).at(r, c) == Complex(0, 0));
}
