#include <cmath>

#include "anett/net.hpp"

namespace anett {

AdamState AdamState::for_params(const NetworkParams& params) {
  AdamState s;
  for (const auto& a : params.arrays) {
    s.first.emplace_back(a.size(), 0.0);
    s.second.emplace_back(a.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first,
               std::span<double> second, std::uint64_t step, double lr, const AdamHyper& hyper) {
  if (grads.size() != params.size() || first.size() != params.size() || second.size() != params.size()) {
    throw ShapeError("adam_step: size mismatch");
  }
  if (step == 0) throw std::invalid_argument("adam_step: step counter starts at 1");
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first[i] = hyper.beta1 * first[i] + (1.0 - hyper.beta1) * g;
    second[i] = hyper.beta2 * second[i] + (1.0 - hyper.beta2) * g * g;
    params[i] -= lr * (first[i] / c1) / (std::sqrt(second[i] / c2) + hyper.eps);
  }
}

void adam_step(NetworkParams& params, const ParamGrads& grads, AdamState& state, double lr,
               const AdamHyper& hyper) {
  if (grads.size() != params.arrays.size() || state.first.size() != params.arrays.size()) {
    throw ShapeError("adam_step: layout mismatch");
  }
  ++state.step;
  std::vector<double> work;
  for (std::size_t a = 0; a < params.arrays.size(); ++a) {
    auto& arr = params.arrays[a];
    work.assign(arr.begin(), arr.end());
    adam_step(work, grads[a], state.first[a], state.second[a], state.step, lr, hyper);
    for (std::size_t i = 0; i < arr.size(); ++i) arr[i] = static_cast<float>(work[i]);
  }
}

}  // namespace anett
