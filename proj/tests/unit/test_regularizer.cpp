#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "anett/prior.hpp"
#include "anett/regularizer.hpp"
#include "test_util.hpp"

namespace anett {
namespace {

using testing::random_code_like;
using testing::random_image;

std::shared_ptr<const NetworkParams> small_theta() {
  auto p = NetworkParams::initialize(Architecture::autoencoder({4, 6, 8}), 3);
  for (std::size_t i = 1; i < p.arrays.size(); i += 2) {
    for (std::size_t k = 0; k < p.arrays[i].size(); ++k) p.arrays[i][k] = 0.05f * static_cast<float>(k % 5) - 0.1f;
  }
  return std::make_shared<const NetworkParams>(std::move(p));
}

LatentCode two_level_code() {
  LatentCode c;
  c.levels = {Tensor(2, 2, 2), Tensor(1, 1, 1)};
  c.weights = {0.5, 0.25};
  return c;
}

TEST(WeightedLq, SingleCoefficient) {
  LatentCode c = two_level_code();
  c.levels[0].data[3] = 1.0;
  EXPECT_DOUBLE_EQ(weighted_lq(c, 1.0), 0.5);
  EXPECT_EQ(weighted_lq(c.zeros_like(), 1.0), 0.0);
}

TEST(WeightedLq, MatchesScalarLoop) {
  const LatentCode c = random_code_like(encode(Image(32), *small_theta()), 4);
  for (double q : {1.0, 1.5, 2.0}) {
    double ref = 0.0;
    for (std::size_t l = 0; l < c.levels.size(); ++l) {
      double level = 0.0;
      for (double v : c.levels[l].data) level += std::pow(std::abs(v), q);
      ref += c.weights[l] * level;
    }
    EXPECT_NEAR(weighted_lq(c, q), ref, 1e-12 * ref);
  }
}

TEST(WeightedLq, Homogeneity) {
  const LatentCode c = random_code_like(encode(Image(16), *small_theta()), 5);
  for (double q : {1.0, 2.0}) {
    for (double a : {-3.0, 0.25, 7.0}) {
      const double expected = std::pow(std::abs(a), q) * weighted_lq(c, q);
      EXPECT_NEAR(weighted_lq(axpy(a, c, c.zeros_like()), q), expected, 1e-12 * expected);
    }
  }
}

TEST(WeightedLq, ExplicitWeights) {
  LatentCode c = two_level_code();
  c.levels[1].data[0] = -2.0;
  const std::vector<double> w = {1.0, 3.0};
  EXPECT_DOUBLE_EQ(weighted_lq(c, 1.0, w), 6.0);
  EXPECT_THROW(weighted_lq(c, 1.0, std::vector<double>{1.0}), ShapeError);
}

TEST(RegParams, Validation) {
  EXPECT_NO_THROW(RegParams{}.validate());
  EXPECT_THROW((RegParams{0.5, 1.0}.validate()), std::invalid_argument);
  EXPECT_THROW((RegParams{1.0, 0.0}.validate()), std::invalid_argument);
}

TEST(RegValue, IdentityPriorIsL1) {
  const IdentityPrior prior;
  const Image u = random_image(8, 1, -1.0, 1.0);
  double l1 = 0.0;
  for (double v : u.values()) l1 += std::abs(v);
  EXPECT_NEAR(reg_value(u, prior, {}), l1, 1e-12 * l1);
  EXPECT_EQ(reg_value(Image(8), prior, {}), 0.0);
}

TEST(RegValue, BoundedBelowByAugmentedTerm) {
  const NetworkPrior prior(small_theta());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image u = random_image(16, s);
    const double aug = 0.5 * 3.0 * squared_norm(difference(u, prior.apply(u)));
    EXPECT_GE(reg_value(u, prior, {1.0, 3.0}), aug);
  }
}

TEST(RegValue, GrowsAlongRays) {
  const NetworkPrior prior(small_theta());
  const Image u0 = random_image(16, 9);
  double last = reg_value(u0, prior, {});
  for (double t : {10.0, 100.0, 1000.0}) {
    const double v = reg_value(scaled(t, u0), prior, {});
    EXPECT_GT(v, last);
    last = v;
  }
}

TEST(GradAugmented, MatchesFiniteDifference) {
  const NetworkPrior prior(small_theta());
  const double c = 2.5;
  const Image u = random_image(16, 2);
  const Image dir = random_image(16, 3, -1.0, 1.0);
  auto potential = [&](const Image& x) { return 0.5 * c * squared_norm(difference(x, prior.apply(x))); };
  const double fd = testing::central_difference(potential, u, dir, 1e-5);
  EXPECT_NEAR(dot(grad_augmented(u, prior, c), dir), fd, 1e-4 * std::abs(fd));
}

TEST(GradAugmented, VanishesForIdentityN) {
  const IdentityPrior prior;
  EXPECT_EQ(l2_norm(grad_augmented(random_image(8, 4), prior, 10.0)), 0.0);
}

TEST(Bregman, ZeroAtReferenceAndNonnegative) {
  const NetworkPrior prior(small_theta());
  const Image u = random_image(16, 5);
  EXPECT_NEAR(bregman_distance(u, u, prior, {}), 0.0, 1e-12);
  for (std::uint64_t s = 0; s < 5; ++s) EXPECT_GE(bregman_distance(random_image(16, 10 + s), u, prior, {}), 0.0);
}

TEST(Bregman, RejectsZeroSmoothing) {
  const IdentityPrior prior;
  EXPECT_THROW(bregman_distance(Image(8), Image(8), prior, {1.0, 1.0, 0.0}), std::invalid_argument);
}

TEST(Bregman, TwoPixelAffineToy) {
  // Only pixels 0 and 1 carry signal. E(u) = u0 + 2 u1 is a single code entry
  // with weight 0.5, N = B u with B = [[0.5, 0.2], [0, 0.8]] on those pixels and the
  // identity elsewhere. With d = u - u_ref and c = 2:
  //   smoothed l1 part: 0.5 * (|x| - |x0| - sign(x0) (x - x0)), x = E(u) = -0.5, x0 = 1 -> 0.5
  //   augmented part:   (c/2) |(I - B) d|^2, d = (0.1, -0.8) -> (0.21, -0.16) -> 0.0697
  const std::size_t side = 8, n = side * side;
  std::vector<double> a(n, 0.0);
  a[0] = 1.0;
  a[1] = 2.0;
  std::vector<double> b(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) b[i * n + i] = 1.0;
  b[0 * n + 0] = 0.5;
  b[0 * n + 1] = 0.2;
  b[1 * n + 1] = 0.8;
  const AffinePrior prior(side, a, 1, b, std::vector<double>(n, 0.0), 0.5);

  Image u(side), u_ref(side);
  u[0] = 0.3;
  u[1] = -0.4;
  u_ref[0] = 0.2;
  u_ref[1] = 0.4;
  EXPECT_NEAR(bregman_distance(u, u_ref, prior, {1.0, 2.0, 1e-6}), 0.5 + 0.0697, 1e-9);
}

TEST(Bregman, AffinePriorShapeChecks) {
  EXPECT_THROW(AffinePrior(8, std::vector<double>(3), 1, std::vector<double>(64 * 64), std::vector<double>(64)),
               ShapeError);
}

}  // namespace
}  // namespace anett
