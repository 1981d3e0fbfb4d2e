#pragma once

#include <span>

#include "anett/grid.hpp"
#include "anett/net.hpp"
#include "anett/prior.hpp"

namespace anett {

struct RegParams {
  double q = 1.0;
  double c = 1.0;
  // Smoothing of |x|^q as (x^2 + s^2)^(q/2); only the Bregman diagnostic uses it.
  double smoothing = 1e-6;

  void validate() const;
};

// sum_l w_l sum_{lambda in level l} |xi_lambda|^q, weights taken from the code.
double weighted_lq(const LatentCode& xi, double q);
double weighted_lq(const LatentCode& xi, double q, std::span<const double> weights);

// R_c(u) = ||E(u)||_{q,w} + (c/2) ||u - N(u)||^2.
double reg_value(const Image& u, const Prior& prior, const RegParams& p);

// Gradient of (c/2) ||u - N(u)||^2: c (I - J_N)^T (u - N(u)).
Image grad_augmented(const Image& u, const Prior& prior, double c);
Image grad_augmented(const Image& u, const Linearization& lin, double c);

// |R(u) - R(u_ref) - <grad R(u_ref), u - u_ref>| for the smoothed R_c.
double bregman_distance(const Image& u, const Image& u_ref, const Prior& prior, const RegParams& p);

}  // namespace anett
