#pragma once

#include <complex>
#include <cstdint>

namespace adobi::rng {

// Purpose tags keep unrelated consumers on disjoint streams, so a draw for
// one purpose never shifts the values another purpose sees.
enum class Purpose : std::uint32_t {
  kMaskColumns = 1,
  kMeasurementNoise = 2,
  kBridgeNoise = 3,
  kResampleNoise = 4,
  kPhantom = 5,
  kCoils = 6,
  kCoilPerturbation = 7,
  kPairDraw = 8,
  kDenoiserTraining = 9,
  kPowerIteration = 10,
  kGeneric = 11,
};

// One Philox4x32-10 block: 4 output words from (key, counter).
void philox4x32_10(const std::uint32_t key[2], const std::uint32_t ctr[4],
                   std::uint32_t out[4]);

// Counter-based generator. A Stream is keyed by (seed, purpose, index); the
// sequence it produces depends only on that key and on how many values have
// been drawn from it, never on what other streams did. This is what makes
// every sampler and generator in the project reproducible across runs and
// thread counts.
class Stream {
 public:
  Stream(std::uint64_t seed, Purpose purpose, std::uint32_t index = 0);

  std::uint32_t u32();
  std::uint64_t u64();

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform();

  // Unbiased uniform integer in [0, n). n must be >= 1.
  std::uint32_t below(std::uint32_t n);

  // Standard normal, Box-Muller; second value of each pair is cached.
  double gaussian();

  // Circular complex Gaussian with E|z|^2 = 1 (re and im each N(0, 1/2)).
  std::complex<double> cgaussian();

 private:
  void refill();

  std::uint32_t key_[2];
  std::uint32_t prefix_[2];  // counter words 2 and 3: (index, purpose)
  std::uint64_t block_ = 0;  // counter words 0 and 1
  std::uint32_t out_[4] = {0, 0, 0, 0};
  int avail_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace adobi::rng
