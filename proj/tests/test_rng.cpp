#include <doctest.h>

#include <cmath>
#include <set>

#include "adobi/rng.hpp"

using namespace adobi;

// Known-answer vectors for Philox4x32-10 from the Random123 reference
// distribution (kat_vectors).
TEST_CASE("philox4x32-10 known-answer vectors") {
  std::uint32_t out[4];

  const std::uint32_t zero_key[2] = {0, 0};
  const std::uint32_t zero_ctr[4] = {0, 0, 0, 0};
  rng::philox4x32_10(zero_key, zero_ctr, out);
  CHECK(out[0] == 0x6627e8d5u);
  CHECK(out[1] == 0xe169c58du);
  CHECK(out[2] == 0xbc57ac4cu);
  CHECK(out[3] == 0x9b00dbd8u);

  const std::uint32_t ones_key[2] = {0xffffffffu, 0xffffffffu};
  const std::uint32_t ones_ctr[4] = {0xffffffffu, 0xffffffffu, 0xffffffffu,
                                     0xffffffffu};
  rng::philox4x32_10(ones_key, ones_ctr, out);
  CHECK(out[0] == 0x408f276du);
  CHECK(out[1] == 0x41c83b0eu);
  CHECK(out[2] == 0xa20bc7c6u);
  CHECK(out[3] == 0x6d5451fdu);

  const std::uint32_t pi_key[2] = {0xa4093822u, 0x299f31d0u};
  const std::uint32_t pi_ctr[4] = {0x243f6a88u, 0x85a308d3u, 0x13198a2eu,
                                   0x03707344u};
  rng::philox4x32_10(pi_key, pi_ctr, out);
  CHECK(out[0] == 0xd16cfe09u);
  CHECK(out[1] == 0x94fdccebu);
  CHECK(out[2] == 0x5001e420u);
  CHECK(out[3] == 0x24126ea1u);
}

TEST_CASE("streams are reproducible and key-separated") {
  rng::Stream a(42, rng::Purpose::kBridgeNoise, 3);
  rng::Stream b(42, rng::Purpose::kBridgeNoise, 3);
  for (int i = 0; i < 100; ++i) CHECK(a.u32() == b.u32());

  rng::Stream c(42, rng::Purpose::kBridgeNoise, 4);
  rng::Stream d(42, rng::Purpose::kResampleNoise, 3);
  rng::Stream e(43, rng::Purpose::kBridgeNoise, 3);
  rng::Stream base(42, rng::Purpose::kBridgeNoise, 3);
  const std::uint32_t first = base.u32();
  CHECK(c.u32() != first);
  CHECK(d.u32() != first);
  CHECK(e.u32() != first);
}

TEST_CASE("uniform and below stay in range") {
  rng::Stream s(7, rng::Purpose::kGeneric);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::set<std::uint32_t> seen;
  for (int i = 0; i < 300; ++i) {
    const std::uint32_t v = s.below(7);
    CHECK(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
  CHECK_THROWS_AS(s.below(0), std::invalid_argument);
}

TEST_CASE("gaussian moments and complex normalization") {
  rng::Stream s(11, rng::Purpose::kGeneric);
  const int n = 200000;
  double mean = 0.0, var = 0.0, cmod = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = s.gaussian();
    mean += g;
    var += g * g;
  }
  mean /= n;
  var /= n;
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(var - 1.0) < 0.02);

  for (int i = 0; i < n; ++i) cmod += std::norm(s.cgaussian());
  cmod /= n;  // E|z|^2 should be 1
  CHECK(std::abs(cmod - 1.0) < 0.02);
}
