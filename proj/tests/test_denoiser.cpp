#include <doctest.h>

#include <cmath>
#include <vector>

#include "adobi/bridge.hpp"
#include "adobi/denoiser.hpp"
#include "adobi/phantom.hpp"
#include "adobi/rng.hpp"

using namespace adobi;

namespace {

ComplexImage random_image(int h, int w, std::uint64_t seed, std::uint32_t index = 0) {
  rng::Stream s(seed, rng::Purpose::kGeneric, index);
  ComplexImage img(h, w);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = s.cgaussian();
  return img;
}

double mean_sq_error(const ComplexImage& a, const ComplexImage& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::norm(a.data()[i] - b.data()[i]);
  return acc / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("gaussian conditional mean: identity and scalar shrinkage") {
  GaussianPairSpec spec;
  spec.height = spec.width = 8;
  const GaussianPairModel model = make_gaussian_pair_model(spec);

  // alpha = 0, sigma = 0: the iterate is the clean image already.
  const ComplexImage x = random_image(8, 8, 1);
  const ComplexImage back = gaussian_mmse(model, x, 0.0, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i)
    CHECK(std::abs(back.data()[i] - x.data()[i]) < 1e-12);

  // Classic denoising shrinkage on a 1x1 model with a deterministic zero
  // source: c = (1-a) v0 / ((1-a)^2 v0 + sigma^2).
  GaussianPairModel scalar;
  scalar.height = scalar.width = 1;
  scalar.mean0 = {Complex(0, 0)};
  scalar.meanz = {Complex(0, 0)};
  scalar.var0 = {2.0};
  scalar.varz = {0.0};
  scalar.cov0z = {Complex(0, 0)};
  scalar.validate();
  const double alpha = 0.4, sigma = 0.5;
  ComplexImage obs(1, 1);
  obs.at(0, 0) = Complex(0.8, -0.6);
  const ComplexImage est = gaussian_mmse(scalar, obs, alpha, sigma);
  const double gain =
      (1 - alpha) * 2.0 / ((1 - alpha) * (1 - alpha) * 2.0 + sigma * sigma);
  CHECK(std::abs(est.at(0, 0) - gain * obs.at(0, 0)) < 1e-12);

  // Zero predictive variance with a deviating observation is an error.
  GaussianPairModel frozen = scalar;
  frozen.var0 = {0.0};
  CHECK_THROWS_AS(gaussian_mmse(frozen, obs, 0.0, 0.0), NumericalError);
}

TEST_CASE("gaussian conditional mean is affine in the iterate") {
  GaussianPairSpec spec;
  spec.height = spec.width = 8;
  spec.mean_scale = 0.5;
  spec.seed = 3;
  const GaussianPairModel model = make_gaussian_pair_model(spec);
  const ComplexImage x1 = random_image(8, 8, 4);
  const ComplexImage x2 = random_image(8, 8, 5);
  const ComplexImage d = random_image(8, 8, 6);

  const double alpha = 0.55, sigma = 0.2;
  // For an affine map, increments do not depend on the base point.
  const ComplexImage lhs =
      cimage_axpy(Complex(-1, 0), gaussian_mmse(model, x1, alpha, sigma),
                  gaussian_mmse(model, cimage_axpy(Complex(1, 0), d, x1), alpha, sigma));
  const ComplexImage rhs =
      cimage_axpy(Complex(-1, 0), gaussian_mmse(model, x2, alpha, sigma),
                  gaussian_mmse(model, cimage_axpy(Complex(1, 0), d, x2), alpha, sigma));
  for (std::size_t i = 0; i < lhs.size(); ++i)
    CHECK(std::abs(lhs.data()[i] - rhs.data()[i]) < 1e-10);
}

TEST_CASE("gaussian conditional mean is MMSE-optimal on its own model") {
  GaussianPairSpec spec;
  spec.height = spec.width = 8;
  spec.seed = 7;
  const GaussianPairModel model = make_gaussian_pair_model(spec);
  const BridgeSchedule schedule = BridgeSchedule::linear(100, 0.3);
  const int t = 60;
  const double alpha = schedule.alpha[t], sigma = schedule.sigma[t];

  const int draws = 20000;
  double mse_oracle = 0.0, mse_scaled = 0.0, mse_offset = 0.0, mse_wrong_t = 0.0;
  for (int k = 0; k < draws; ++k) {
    const auto [x0, z] = draw_gaussian_pair(model, 100, static_cast<std::uint32_t>(k));
    const ComplexImage x_t = forward_bridge(x0, z, t, schedule, 200 + k);
    const ComplexImage best = gaussian_mmse(model, x_t, alpha, sigma);
    mse_oracle += mean_sq_error(best, x0);
    // Affine competitors: scaled gain, constant offset, mismatched time.
    mse_scaled += mean_sq_error(cimage_axpy(Complex(0.05, 0), best, best), x0);
    ComplexImage shifted = best;
    for (std::size_t i = 0; i < shifted.size(); ++i)
      shifted.data()[i] += Complex(0.05, 0.0);
    mse_offset += mean_sq_error(shifted, x0);
    mse_wrong_t += mean_sq_error(
        gaussian_mmse(model, x_t, schedule.alpha[40], schedule.sigma[40]), x0);
  }
  CHECK(mse_oracle < mse_scaled);
  CHECK(mse_oracle < mse_offset);
  CHECK(mse_oracle < mse_wrong_t);

  // The empirical error agrees with the closed-form floor.
  const double expected = gaussian_mmse_expected_error(model, alpha, sigma);
  CHECK(mse_oracle / draws == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("ridge training: identity bin, determinism, solver health") {
  // One-step schedule with no noise: bin 0 sees the clean image itself.
  const BridgeSchedule schedule = BridgeSchedule::linear(1, 0.0);
  std::vector<std::pair<ComplexImage, ComplexImage>> pairs;
  for (std::uint32_t k = 0; k < 6; ++k)
    pairs.emplace_back(random_image(12, 12, 300, k), random_image(12, 12, 301, k));

  const RidgeDenoiser d = ridge_train(pairs, schedule, 2, 1, 1e-9, 5, 2);
  REQUIRE(d.trained[0]);
  REQUIRE(d.trained[1]);
  CHECK(d.train_mse[0] < 1e-10);
  for (int bin = 0; bin < 2; ++bin) CHECK(d.solve_residual[bin] < 1e-8);

  const ComplexImage probe = random_image(12, 12, 302);
  const ComplexImage out = ridge_apply(d, probe, 0, schedule);
  CHECK(out.same_shape(probe));
  CHECK(mean_sq_error(out, probe) < 1e-9);

  // Deterministic: training twice gives identical weights.
  const RidgeDenoiser d2 = ridge_train(pairs, schedule, 2, 1, 1e-9, 5, 2);
  for (int bin = 0; bin < 2; ++bin) {
    CHECK(d.bias[bin] == d2.bias[bin]);
    for (std::size_t t = 0; t < d.weights[bin].size(); ++t)
      CHECK(d.weights[bin][t] == d2.weights[bin][t]);
  }

  // Zero input with (near) zero bias maps to (near) zero.
  ComplexImage zeros(12, 12);
  const ComplexImage zout = d.apply(zeros, 0.0);
  CHECK(max_abs(zout) <= std::abs(d.bias[0]) + 1e-12);

  CHECK_THROWS_AS(ridge_train(pairs, schedule, 2, 1, 0.0, 5, 2), NumericalError);
  CHECK_THROWS_AS(ridge_train({}, schedule, 2, 1, 1e-3, 5, 2), ConfigError);
}

TEST_CASE("ridge weights shrink to zero as the penalty grows") {
  // Source and clean images independent; at alpha = 1 the features carry no
  // signal, so heavy regularization must flatten the weights.
  const BridgeSchedule schedule = BridgeSchedule::linear(1, 0.0);
  std::vector<std::pair<ComplexImage, ComplexImage>> pairs;
  for (std::uint32_t k = 0; k < 8; ++k)
    pairs.emplace_back(random_image(10, 10, 400, k), random_image(10, 10, 401, k));

  const RidgeDenoiser light = ridge_train(pairs, schedule, 2, 1, 1e-3, 6, 2);
  const RidgeDenoiser heavy = ridge_train(pairs, schedule, 2, 1, 1e9, 6, 2);
  auto weight_norm = [](const RidgeDenoiser& d, int bin) {
    double acc = 0.0;
    for (const Complex& w : d.weights[static_cast<std::size_t>(bin)])
      acc += std::norm(w);
    return std::sqrt(acc);
  };
  CHECK(weight_norm(heavy, 1) < 1e-6);
  CHECK(weight_norm(heavy, 1) < weight_norm(light, 1));

  // Training loss is nondecreasing along the ridge path.
  const RidgeDenoiser mid = ridge_train(pairs, schedule, 2, 1, 1e-1, 6, 2);
  for (int bin = 0; bin < 2; ++bin) {
    CHECK(light.train_mse[bin] <= mid.train_mse[bin] * (1.0 + 1e-9));
    CHECK(mid.train_mse[bin] <= heavy.train_mse[bin] * (1.0 + 1e-9));
  }
}

TEST_CASE("ridge approaches the gaussian oracle on matched data") {
  GaussianPairSpec spec;
  spec.height = spec.width = 16;
  spec.seed = 9;
  const GaussianPairModel model = make_gaussian_pair_model(spec);
  const BridgeSchedule schedule = BridgeSchedule::linear(64, 0.25);

  std::vector<std::pair<ComplexImage, ComplexImage>> train;
  for (std::uint32_t k = 0; k < 96; ++k)
    train.push_back(draw_gaussian_pair(model, 500, k));
  const int bins = 8;
  const RidgeDenoiser learned = ridge_train(train, schedule, bins, 2, 1e-5, 11, 2);

  for (const int t : {8, 24, 40, 56}) {
    const double alpha = schedule.alpha[t], sigma = schedule.sigma[t];
    double mse_learned = 0.0, mse_oracle = 0.0;
    const int test_draws = 64;
    for (int k = 0; k < test_draws; ++k) {
      const auto [x0, z] =
          draw_gaussian_pair(model, 600, static_cast<std::uint32_t>(k));
      const ComplexImage x_t = forward_bridge(x0, z, t, schedule, 700 + k);
      mse_learned += mean_sq_error(learned.apply(x_t, alpha), x0);
      mse_oracle += mean_sq_error(gaussian_mmse(model, x_t, alpha, sigma), x0);
    }
    CHECK(mse_learned <= mse_oracle * 1.10);
    CHECK(mse_learned >= mse_oracle * 0.90);
  }

  // Bins the schedule never visited stay untrained and refuse to run.
  const BridgeSchedule stub = BridgeSchedule::linear(1, 0.0);
  const RidgeDenoiser sparse =
      ridge_train({train[0]}, stub, 4, 1, 1e-3, 12, 1);
  CHECK_THROWS_AS(sparse.apply(train[0].first, 0.4), ConfigError);
}

TEST_CASE("empirical fit reproduces the generating model") {
  GaussianPairSpec spec;
  spec.height = spec.width = 8;
  spec.seed = 13;
  const GaussianPairModel model = make_gaussian_pair_model(spec);
  std::vector<std::pair<ComplexImage, ComplexImage>> pairs;
  for (std::uint32_t k = 0; k < 4000; ++k)
    pairs.push_back(draw_gaussian_pair(model, 900, k));
  const GaussianPairModel fitted = GaussianPairModel::fit(pairs);
  fitted.validate();

  double worst_var = 0.0, worst_cov = 0.0;
  for (std::size_t f = 0; f < model.var0.size(); ++f) {
    worst_var = std::max(worst_var,
                         std::abs(fitted.var0[f] - model.var0[f]) / model.var0[f]);
    worst_cov = std::max(worst_cov, std::abs(fitted.cov0z[f] - model.cov0z[f]) /
                                        std::abs(model.cov0z[f]));
  }
  CHECK(worst_var < 0.25);  // 4000 samples: ~6 sigma of the estimator noise
  CHECK(worst_cov < 0.25);
}
