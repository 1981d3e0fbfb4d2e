#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "anett/net.hpp"
#include "tensor_ops.hpp"
#include "test_util.hpp"

namespace anett {
namespace {

using testing::random_code_like;
using testing::random_image;

const Architecture kSmallAe = Architecture::autoencoder({4, 6, 8});
const Architecture kSmallAdapter = Architecture::adapter({4, 6});

// Trained networks have nonzero biases; mimic that so zero-bias shortcuts are not exercised.
NetworkParams with_random_biases(NetworkParams p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-0.2f, 0.2f);
  for (std::size_t i = 1; i < p.arrays.size(); i += 2) {
    for (float& v : p.arrays[i]) v = d(rng);
  }
  return p;
}

NetworkParams small_theta() { return with_random_biases(NetworkParams::initialize(kSmallAe, 3), 30); }

NetworkParams small_kappa() {
  // nonzero head so the adapter is not the identity
  NetworkParams k = NetworkParams::initialize(kSmallAdapter, 4);
  std::mt19937_64 rng(40);
  std::uniform_real_distribution<float> d(-0.1f, 0.1f);
  for (auto& a : k.arrays) {
    for (float& v : a) v += d(rng);
  }
  return k;
}

double code_dot(const LatentCode& a, const LatentCode& b) { return dot(a, b); }

TEST(Architecture, ParseRoundTrip) {
  for (const Architecture& a : {Architecture::autoencoder(), Architecture::adapter(), kSmallAe}) {
    EXPECT_EQ(Architecture::parse(a.to_string()), a);
  }
  EXPECT_EQ(Architecture::autoencoder().side_multiple(), 8u);
  EXPECT_THROW(Architecture::parse("kind=banana"), std::invalid_argument);
  EXPECT_THROW(Architecture::parse("channels=8"), std::invalid_argument);
  Architecture bad = Architecture::adapter({4, 6, 8});
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = Architecture::autoencoder();
  bad.kernel = 2;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(NetworkParams, InitializationDeterministic) {
  EXPECT_EQ(NetworkParams::initialize(kSmallAe, 5), NetworkParams::initialize(kSmallAe, 5));
  EXPECT_NE(NetworkParams::initialize(kSmallAe, 5), NetworkParams::initialize(kSmallAe, 6));
  const NetworkParams p = NetworkParams::initialize(kSmallAe, 5);
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.arrays.size(), kSmallAe.array_sizes().size());
}

TEST(NetworkParams, SaveLoadRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "anett_net_roundtrip.params";
  const NetworkParams p = small_theta();
  save_params(p, path);
  EXPECT_EQ(load_params(path), p);
  EXPECT_EQ(load_params(path, NetKind::kAutoencoder), p);
  EXPECT_THROW(load_params(path, NetKind::kAdapter), ShapeError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_params(path), FileNotFoundError);
}

TEST(NetworkParams, DescriptorMismatch) {
  NetworkParams p = small_theta();
  p.arrays[2].pop_back();
  EXPECT_THROW(p.validate(), ShapeError);
  EXPECT_THROW(encode(Image(16), p), ShapeError);
}

TEST(Forward, ShapesAndDeterminism) {
  const NetworkParams theta = small_theta();
  const Image u = random_image(32, 1);
  const LatentCode c = encode(u, theta);
  ASSERT_EQ(c.levels.size(), 3u);
  EXPECT_EQ(c.levels[0].channels, 3u);
  EXPECT_EQ(c.levels[0].height, 16u);
  EXPECT_EQ(c.levels[2].channels, 4u);  // detail plus coarse
  EXPECT_EQ(c.levels[2].height, 4u);
  EXPECT_EQ(c.weights, dyadic_weights(3));
  EXPECT_DOUBLE_EQ(c.weights[0], 0.5);
  EXPECT_EQ(encode(u, theta), c);
  EXPECT_EQ(autoencode(u, theta), decode(c, theta));
  EXPECT_EQ(full_model(u, theta, nullptr), autoencode(u, theta));
}

TEST(Forward, SideMustBeMultiple) { EXPECT_THROW(encode(Image(12), small_theta()), ShapeError); }

TEST(Forward, ZeroInZeroOutAtInitialization) {
  const NetworkParams theta = NetworkParams::initialize(kSmallAe, 9);
  const LatentCode c = encode(Image(16), theta);
  EXPECT_EQ(squared_norm(c), 0.0);
  EXPECT_EQ(l2_norm(decode(c, theta)), 0.0);
}

TEST(Forward, AdapterStartsAsIdentity) {
  const NetworkParams kappa = NetworkParams::initialize(kSmallAdapter, 2);
  const Image v = random_image(16, 7);
  EXPECT_EQ(adapt(v, kappa), v);
}

TEST(Forward, LipschitzProbe) {
  const NetworkParams theta = small_theta();
  const NetworkParams kappa = small_kappa();
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image u = random_image(16, s);
    const Image v = axpy(1e-2, random_image(16, s + 50, -1.0, 1.0), u);
    const double ratio = l2_norm(difference(full_model(u, theta, &kappa), full_model(v, theta, &kappa))) /
                         l2_norm(difference(u, v));
    ASSERT_TRUE(std::isfinite(ratio));
    worst = std::max(worst, ratio);
  }
  EXPECT_LT(worst, 100.0);
}

TEST(Vjp, EncodeInputMatchesFiniteDifference) {
  const NetworkParams theta = small_theta();
  const Image u = random_image(16, 1);
  const LatentCode w = random_code_like(encode(u, theta), 2);
  const Image dir = random_image(16, 3, -1.0, 1.0);
  const double fd = testing::central_difference([&](const Image& x) { return code_dot(encode(x, theta), w); },
                                                u, dir, 1e-5);
  EXPECT_NEAR(dot(vjp_input_encode(u, theta, w), dir), fd, 1e-6 * std::max(1.0, std::abs(fd)));
}

TEST(Vjp, DecodeInputMatchesFiniteDifference) {
  const NetworkParams theta = small_theta();
  const LatentCode c = random_code_like(encode(Image(16), theta), 4);
  const LatentCode dir = random_code_like(c, 5);
  const Image w = random_image(16, 6, -1.0, 1.0);
  const double h = 1e-5;
  const double fd =
      (dot(decode(axpy(h, dir, c), theta), w) - dot(decode(axpy(-h, dir, c), theta), w)) / (2 * h);
  EXPECT_NEAR(code_dot(vjp_input_decode(c, theta, w), dir), fd, 1e-6 * std::max(1.0, std::abs(fd)));
}

TEST(Vjp, AutoencodeAdaptAndFullMatchFiniteDifference) {
  const NetworkParams theta = small_theta();
  const NetworkParams kappa = small_kappa();
  const Image u = random_image(16, 7);
  const Image w = random_image(16, 8, -1.0, 1.0);
  const Image dir = random_image(16, 9, -1.0, 1.0);
  auto check = [&](const std::function<Image(const Image&)>& f, const Image& g) {
    const double fd = testing::central_difference([&](const Image& x) { return dot(f(x), w); }, u, dir, 1e-5);
    EXPECT_NEAR(dot(g, dir), fd, 1e-6 * std::max(1.0, std::abs(fd)));
  };
  check([&](const Image& x) { return autoencode(x, theta); }, vjp_input_autoencode(u, theta, w));
  check([&](const Image& x) { return adapt(x, kappa); }, vjp_input_adapt(u, kappa, w));
  check([&](const Image& x) { return full_model(x, theta, &kappa); }, vjp_input_full(u, theta, kappa, w));
}

// d/dp <f(p), w> for a single float parameter entry
double param_fd(NetworkParams p, std::size_t a, std::size_t i, const std::function<double(const NetworkParams&)>& f) {
  const float base = p.arrays[a][i];
  const float up = base + 1e-2f;
  const float down = base - 1e-2f;
  p.arrays[a][i] = up;
  const double fu = f(p);
  p.arrays[a][i] = down;
  const double fd = f(p);
  return (fu - fd) / (static_cast<double>(up) - static_cast<double>(down));
}

void check_param_grads(const NetworkParams& p, const ParamGrads& g,
                       const std::function<double(const NetworkParams&)>& f) {
  ASSERT_EQ(g.size(), p.arrays.size());
  for (std::size_t a = 0; a < p.arrays.size(); ++a) {
    ASSERT_EQ(g[a].size(), p.arrays[a].size());
    for (std::size_t i : {std::size_t{0}, p.arrays[a].size() / 2, p.arrays[a].size() - 1}) {
      const double fd = param_fd(p, a, i, f);
      EXPECT_NEAR(g[a][i], fd, 1e-3 * std::max(1.0, std::abs(fd))) << "array " << a << " entry " << i;
    }
  }
}

TEST(Vjp, EncodeParams) {
  const NetworkParams theta = small_theta();
  const Image u = random_image(16, 10);
  const LatentCode w = random_code_like(encode(u, theta), 11);
  check_param_grads(theta, vjp_params_encode(u, theta, w),
                    [&](const NetworkParams& p) { return code_dot(encode(u, p), w); });
}

TEST(Vjp, DecodeParams) {
  const NetworkParams theta = small_theta();
  const LatentCode c = random_code_like(encode(Image(16), theta), 12);
  const Image w = random_image(16, 13, -1.0, 1.0);
  check_param_grads(theta, vjp_params_decode(c, theta, w),
                    [&](const NetworkParams& p) { return dot(decode(c, p), w); });
}

TEST(Vjp, AutoencodeAndAdapterParams) {
  const NetworkParams theta = small_theta();
  const NetworkParams kappa = small_kappa();
  const Image u = random_image(16, 14);
  const Image w = random_image(16, 15, -1.0, 1.0);
  check_param_grads(theta, vjp_params_autoencode(u, theta, w),
                    [&](const NetworkParams& p) { return dot(autoencode(u, p), w); });
  check_param_grads(kappa, vjp_params_adapt(u, kappa, w),
                    [&](const NetworkParams& p) { return dot(adapt(u, p), w); });
}

TEST(Vjp, ZeroCotangentGivesZero) {
  const NetworkParams theta = small_theta();
  const Image u = random_image(16, 16);
  const LatentCode zero = encode(u, theta).zeros_like();
  EXPECT_EQ(l2_norm(vjp_input_encode(u, theta, zero)), 0.0);
  for (const auto& a : vjp_params_autoencode(u, theta, Image(16))) {
    for (double v : a) EXPECT_EQ(v, 0.0);
  }
}

TEST(Vjp, CotangentShapeChecked) {
  const NetworkParams theta = small_theta();
  const DecoderTape tape = trace_decode(encode(Image(16), theta), theta);
  EXPECT_THROW(backprop_decode(tape, theta, Image(32), {}), ShapeError);
}

TEST(Vjp, ModelTapeCombinesCodeAndOutputCotangents) {
  const NetworkParams theta = small_theta();
  const NetworkParams kappa = small_kappa();
  const Image u = random_image(16, 17);
  const ModelTape tape = trace_model(u, theta, &kappa);
  const LatentCode cc = random_code_like(tape.code(), 18);
  const Image co = random_image(16, 19, -1.0, 1.0);
  const Image both = backprop_model(tape, theta, &kappa, &cc, &co, {}).input;
  const Image sum = axpy(1.0, vjp_input_encode(u, theta, cc), vjp_input_full(u, theta, kappa, co));
  EXPECT_LE(l2_norm(difference(both, sum)), 1e-12 * l2_norm(sum));
  EXPECT_THROW(backprop_model(tape, theta, nullptr, &cc, nullptr, {}), std::invalid_argument);
}

TEST(ConvKernel, BackwardIsTransposedConvolution) {
  // single linear layer: <conv(x), g> = <x, conv^T(g)> computed by a naive loop
  const ops::ConvShape shape{2, 3, 3};
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> w(shape.weight_count());
  for (float& v : w) v = d(rng);
  Tensor x(2, 6, 5), gy(3, 6, 5);
  for (double& v : x.data) v = d(rng);
  for (double& v : gy.data) v = d(rng);

  Tensor naive(2, 6, 5);
  for (std::size_t o = 0; o < 3; ++o)
    for (std::size_t i = 0; i < 2; ++i)
      for (std::ptrdiff_t r = 0; r < 6; ++r)
        for (std::ptrdiff_t c = 0; c < 5; ++c)
          for (std::ptrdiff_t kr = 0; kr < 3; ++kr)
            for (std::ptrdiff_t kc = 0; kc < 3; ++kc) {
              const std::ptrdiff_t rr = r + kr - 1, cc = c + kc - 1;
              if (rr < 0 || rr >= 6 || cc < 0 || cc >= 5) continue;
              naive.plane(i)[rr * 5 + cc] += w[((o * 2 + i) * 3 + kr) * 3 + kc] * gy.plane(o)[r * 5 + c];
            }

  Tensor gx(2, 6, 5);
  ops::conv2d_backward(x, w.data(), shape, gy, &gx, nullptr, nullptr);
  for (std::size_t k = 0; k < gx.size(); ++k) EXPECT_NEAR(gx.data[k], naive.data[k], 1e-12);

  const Tensor y = ops::conv2d(x, w.data(), nullptr, shape);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) lhs += y.data[k] * gy.data[k];
  for (std::size_t k = 0; k < x.size(); ++k) rhs += x.data[k] * gx.data[k];
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
}

TEST(ConvKernel, PoolUpsampleAdjoint) {
  Tensor x(2, 8, 8), y(2, 4, 4);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  for (double& v : x.data) v = d(rng);
  for (double& v : y.data) v = d(rng);
  const Tensor px = ops::avg_pool2(x);
  const Tensor bt = ops::avg_pool2_backward(y);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) lhs += px.data[k] * y.data[k];
  for (std::size_t k = 0; k < x.size(); ++k) rhs += x.data[k] * bt.data[k];
  EXPECT_NEAR(lhs, rhs, 1e-12 * std::abs(lhs));
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p = {1.0, -2.0}, g = {0.0, 0.0}, m(2), v(2);
  adam_step(p, g, m, v, 1, 0.1);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0}));
}

TEST(Adam, FirstStepHasLearningRateMagnitude) {
  std::vector<double> p = {0.0, 0.0}, g = {3.0, -1e-3}, m(2), v(2);
  adam_step(p, g, m, v, 1, 0.01);
  EXPECT_NEAR(p[0], -0.01, 1e-9);
  EXPECT_NEAR(p[1], 0.01, 1e-7);
}

TEST(Adam, ConvergesOnQuadratic) {
  // f(p) = sum a_i (p_i - t_i)^2
  const std::vector<double> a = {1.0, 10.0, 0.1}, t = {1.0, -2.0, 0.5};
  std::vector<double> p(3, 0.0), m(3), v(3), g(3);
  for (std::uint64_t k = 1; k <= 5000; ++k) {
    for (std::size_t i = 0; i < 3; ++i) g[i] = 2.0 * a[i] * (p[i] - t[i]);
    adam_step(p, g, m, v, k, 0.01);
  }
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], t[i], 1e-3);
}

TEST(Adam, NetworkVersionUpdatesFloatParams) {
  NetworkParams p = NetworkParams::initialize(kSmallAe, 1);
  AdamState s = AdamState::for_params(p);
  ParamGrads g = zero_grads(p);
  g[0][0] = 1.0;
  const float before = p.arrays[0][0];
  adam_step(p, g, s, 1e-3);
  EXPECT_EQ(s.step, 1u);
  EXPECT_NEAR(p.arrays[0][0], before - 1e-3f, 1e-6);
  EXPECT_EQ(p.arrays[0][1], NetworkParams::initialize(kSmallAe, 1).arrays[0][1]);
}

}  // namespace
}  // namespace anett
