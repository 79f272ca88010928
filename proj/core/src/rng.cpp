#include "adobi/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace adobi::rng {
namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

void philox4x32_10(const std::uint32_t key[2], const std::uint32_t ctr[4],
                   std::uint32_t out[4]) {
  std::uint32_t k0 = key[0], k1 = key[1];
  std::uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3];
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, c0, hi0, lo0);
    mulhilo(kMul1, c2, hi1, lo1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  out[0] = c0;
  out[1] = c1;
  out[2] = c2;
  out[3] = c3;
}

Stream::Stream(std::uint64_t seed, Purpose purpose, std::uint32_t index) {
  key_[0] = static_cast<std::uint32_t>(seed);
  key_[1] = static_cast<std::uint32_t>(seed >> 32);
  prefix_[0] = index;
  prefix_[1] = static_cast<std::uint32_t>(purpose);
}

void Stream::refill() {
  const std::uint32_t ctr[4] = {static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32),
                                prefix_[0], prefix_[1]};
  philox4x32_10(key_, ctr, out_);
  ++block_;
  avail_ = 4;
}

std::uint32_t Stream::u32() {
  if (avail_ == 0) refill();
  return out_[4 - avail_--];
}

std::uint64_t Stream::u64() {
  const std::uint64_t lo = u32();
  const std::uint64_t hi = u32();
  return (hi << 32) | lo;
}

double Stream::uniform() {
  return static_cast<double>(u64() >> 11) * 0x1.0p-53;
}

std::uint32_t Stream::below(std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("Stream::below: n must be >= 1");
  // Lemire's multiply-then-reject; exact uniformity, data-independent state use.
  const std::uint32_t threshold = (-n) % n;
  for (;;) {
    const std::uint64_t product = static_cast<std::uint64_t>(u32()) * n;
    if (static_cast<std::uint32_t>(product) >= threshold)
      return static_cast<std::uint32_t>(product >> 32);
  }
}

double Stream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = kTwoPi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

std::complex<double> Stream::cgaussian() {
  constexpr double kHalfSqrt = 0.70710678118654752440;  // sqrt(1/2)
  const double re = gaussian() * kHalfSqrt;
  const double im = gaussian() * kHalfSqrt;
  return {re, im};
}

}  // namespace adobi::rng
