#include <benchmark/benchmark.h>

#include <memory>

#include "anett/net.hpp"
#include "anett/phantoms.hpp"
#include "anett/prior.hpp"
#include "anett/solver.hpp"
#include "anett/tomo.hpp"

namespace {

using namespace anett;

void BM_RadonForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Geometry g = Geometry::for_image(n, 60);
  const Image u = random_phantom(3, n);
  for (auto _ : state) benchmark::DoNotOptimize(radon_forward(u, g));
}
BENCHMARK(BM_RadonForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_RadonAdjoint(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Geometry g = Geometry::for_image(n, 60);
  const Sinogram y = radon_forward(random_phantom(3, n), g);
  for (auto _ : state) benchmark::DoNotOptimize(radon_adjoint(y, g));
}
BENCHMARK(BM_RadonAdjoint)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Fbp(benchmark::State& state) {
  const Geometry g = Geometry::for_image(128, static_cast<std::size_t>(state.range(0)));
  const Sinogram y = radon_forward(random_phantom(3, 128), g);
  for (auto _ : state) benchmark::DoNotOptimize(fbp(y, g));
}
BENCHMARK(BM_Fbp)->Arg(60)->Arg(180)->Unit(benchmark::kMillisecond);

void BM_Autoencode(benchmark::State& state) {
  const NetworkParams theta = NetworkParams::initialize(Architecture::autoencoder(), 7);
  const Image u = random_phantom(3, 128);
  for (auto _ : state) benchmark::DoNotOptimize(autoencode(u, theta));
}
BENCHMARK(BM_Autoencode)->Unit(benchmark::kMillisecond);

void BM_FullModelVjp(benchmark::State& state) {
  const NetworkParams theta = NetworkParams::initialize(Architecture::autoencoder(), 7);
  const NetworkParams kappa = NetworkParams::initialize(Architecture::adapter(), 11);
  const Image u = random_phantom(3, 128);
  const Image cot = random_phantom(4, 128);
  for (auto _ : state) benchmark::DoNotOptimize(vjp_input_full(u, theta, kappa, cot));
}
BENCHMARK(BM_FullModelVjp)->Unit(benchmark::kMillisecond);

void BM_AutoencodeParamGrads(benchmark::State& state) {
  const NetworkParams theta = NetworkParams::initialize(Architecture::autoencoder(), 7);
  const Image u = random_phantom(3, 128);
  const Image cot = random_phantom(4, 128);
  for (auto _ : state) benchmark::DoNotOptimize(vjp_params_autoencode(u, theta, cot));
}
BENCHMARK(BM_AutoencodeParamGrads)->Unit(benchmark::kMillisecond);

void BM_UUpdate(benchmark::State& state) {
  auto theta = std::make_shared<const NetworkParams>(NetworkParams::initialize(Architecture::autoencoder(), 7));
  auto kappa = std::make_shared<const NetworkParams>(NetworkParams::initialize(Architecture::adapter(), 11));
  const NetworkPrior prior(theta, kappa);
  const RadonOperator op{Geometry()};
  const Image truth = random_phantom(3, 128);
  const Sinogram y = op.apply(truth);
  const Image u0 = op.pseudo_inverse(y);
  const LatentCode xi = prior.encode(u0);
  const LatentCode eta = xi.zeros_like();
  const USubproblem p{y, op, prior, xi, eta, 5e-4 * 10.0, 2.0};
  for (auto _ : state) benchmark::DoNotOptimize(u_update(u0, p, 10, 0.1, 0.8));
}
BENCHMARK(BM_UUpdate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
