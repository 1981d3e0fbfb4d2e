#include "anett/regularizer.hpp"

#include <cmath>
#include <stdexcept>

namespace anett {

void RegParams::validate() const {
  if (!(q >= 1.0)) throw std::invalid_argument("RegParams: q must be >= 1");
  if (!(c > 0.0)) throw std::invalid_argument("RegParams: c must be > 0");
  if (!(smoothing >= 0.0)) throw std::invalid_argument("RegParams: smoothing must be >= 0");
}

double weighted_lq(const LatentCode& xi, double q) { return weighted_lq(xi, q, xi.weights); }

double weighted_lq(const LatentCode& xi, double q, std::span<const double> weights) {
  if (weights.size() != xi.levels.size()) throw ShapeError("weighted_lq: one weight per level required");
  if (!(q >= 1.0)) throw std::invalid_argument("weighted_lq: q must be >= 1");
  double total = 0.0;
  for (std::size_t l = 0; l < xi.levels.size(); ++l) {
    if (!(weights[l] > 0.0)) throw std::invalid_argument("weighted_lq: weights must be positive");
    double s = 0.0;
    if (q == 1.0) {
      for (double v : xi.levels[l].data) s += std::abs(v);
    } else {
      for (double v : xi.levels[l].data) s += std::pow(std::abs(v), q);
    }
    total += weights[l] * s;
  }
  return total;
}

namespace {

double smoothed_lq(const LatentCode& xi, double q, double eps) {
  double total = 0.0;
  for (std::size_t l = 0; l < xi.levels.size(); ++l) {
    double s = 0.0;
    for (double v : xi.levels[l].data) s += std::pow(v * v + eps * eps, 0.5 * q);
    total += xi.weights[l] * s;
  }
  return total;
}

LatentCode smoothed_lq_grad(const LatentCode& xi, double q, double eps) {
  LatentCode g = xi;
  for (std::size_t l = 0; l < g.levels.size(); ++l) {
    for (double& v : g.levels[l].data) v = xi.weights[l] * q * v * std::pow(v * v + eps * eps, 0.5 * q - 1.0);
  }
  return g;
}

}  // namespace

double reg_value(const Image& u, const Prior& prior, const RegParams& p) {
  p.validate();
  const PriorValue v = prior.evaluate(u);
  return weighted_lq(v.code, p.q) + 0.5 * p.c * squared_norm(difference(u, v.output));
}

Image grad_augmented(const Image& u, const Linearization& lin, double c) {
  const Image r = difference(u, lin.output);
  const Image back = lin.pullback(nullptr, &r);
  return scaled(c, difference(r, back));
}

Image grad_augmented(const Image& u, const Prior& prior, double c) {
  return grad_augmented(u, prior.linearize(u), c);
}

double bregman_distance(const Image& u, const Image& u_ref, const Prior& prior, const RegParams& p) {
  p.validate();
  if (!(p.smoothing > 0.0)) throw std::invalid_argument("bregman_distance: smoothing must be > 0");
  require_same_shape(u, u_ref, "bregman_distance");

  auto value = [&](const LatentCode& code, const Image& x, const Image& nx) {
    return smoothed_lq(code, p.q, p.smoothing) + 0.5 * p.c * squared_norm(difference(x, nx));
  };

  const Linearization ref = prior.linearize(u_ref);
  const LatentCode code_cot = smoothed_lq_grad(ref.code, p.q, p.smoothing);
  const Image grad = axpy(1.0, ref.pullback(&code_cot, nullptr), grad_augmented(u_ref, ref, p.c));

  const PriorValue at_u = prior.evaluate(u);
  const double r_u = value(at_u.code, u, at_u.output);
  const double r_ref = value(ref.code, u_ref, ref.output);
  return std::abs(r_u - r_ref - dot(grad, difference(u, u_ref)));
}

}  // namespace anett
